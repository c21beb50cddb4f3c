#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "opser/rng.hpp"
#include "opser/types.hpp"

namespace opser {

enum class PropagationModel : std::uint8_t {
  LogNormalShadowing,
  TwoRayGroundWithError,
};

/// A frame surviving an overlap must exceed the aggregate interferer power
/// by this margin (conventional 802.15.4 co-channel rejection).
inline constexpr double kCaptureMarginDb = 10.0;

struct PropagationParams {
  PropagationModel model = PropagationModel::LogNormalShadowing;
  double pt_dbm = 0.0;        // transmit power
  double beta = 4.5;          // path-loss exponent
  double sigma_db = 4.0;      // shadowing std-dev
  double d0_m = 1.0;          // reference distance
  double pl_d0_db = 40.05;    // free-space loss at 1 m, 2.4 GHz
  double error_rate = 0.0;    // per-packet drop probability (model 2)
  double rx_thresh_dbm = -110.0;
  double cs_thresh_dbm = -110.0;
  double ed_min_dbm = -110.0;
  double ed_max_dbm = -45.0;
  double antenna_height_m = 0.03125;  // two-ray tx/rx height
  double freq_hz = 2.4e9;

  void validate() const {
    if (!(ed_min_dbm < ed_max_dbm)) throw std::invalid_argument("radio: ed_min must be < ed_max");
    if (sigma_db < 0) throw std::invalid_argument("radio: sigma_db must be >= 0");
    if (beta <= 0) throw std::invalid_argument("radio: beta must be > 0");
    if (d0_m <= 0) throw std::invalid_argument("radio: d0 must be > 0");
    if (error_rate < 0 || error_rate > 1) throw std::invalid_argument("radio: error_rate must be in [0,1]");
  }
};

struct RxReport {
  double rssi_dbm = 0.0;
  std::uint8_t lqi = 0;
  bool received_ok = false;
  bool collided = false;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// Received power for one frame at the given separation. Model 1 is
/// log-normal shadowing; model 2 is deterministic Friis/two-ray with the
/// standard crossover distance (the per-packet error draw lives in
/// reception_decision, not here).
inline double compute_rssi(const PropagationParams& p, double distance_m, RngStream& rng) {
  if (distance_m <= 0) throw std::invalid_argument("compute_rssi: degenerate geometry");
  if (p.model == PropagationModel::LogNormalShadowing) {
    double x = p.sigma_db > 0 ? rng.normal(0.0, p.sigma_db) : 0.0;
    return p.pt_dbm - p.pl_d0_db - 10.0 * p.beta * std::log10(distance_m / p.d0_m) + x;
  }
  // Two-ray ground with Friis below the crossover distance.
  constexpr double kC = 299792458.0;
  double lambda = kC / p.freq_hz;
  double ht = p.antenna_height_m, hr = p.antenna_height_m;
  double crossover = 4.0 * M_PI * ht * hr / lambda;
  if (distance_m < crossover) {
    double fs = lambda / (4.0 * M_PI * distance_m);
    return p.pt_dbm + 20.0 * std::log10(fs);
  }
  return p.pt_dbm + 10.0 * std::log10((ht * ht * hr * hr) /
                                      (distance_m * distance_m * distance_m * distance_m));
}

/// RSSI to the 8-bit link quality indicator: linear between the energy
/// detection bounds, clamped, round half up.
inline std::uint8_t rssi_to_lqi(double rssi_dbm, double ed_min_dbm, double ed_max_dbm) {
  double clamped = std::clamp(rssi_dbm, ed_min_dbm, ed_max_dbm);
  double v = 255.0 * (clamped - ed_min_dbm) / (ed_max_dbm - ed_min_dbm);
  double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

/// Pure per-frame reception outcome. concurrent_frames counts overlapping
/// equal-power frames; capture requires the frame to clear their sum by
/// kCaptureMarginDb. With model 2, one uniform draw decides the per-packet
/// error drop.
inline RxReport reception_decision(const PropagationParams& p, double rssi_dbm,
                                   int concurrent_frames, RngStream& rng) {
  RxReport r;
  r.rssi_dbm = rssi_dbm;
  r.lqi = rssi_to_lqi(rssi_dbm, p.ed_min_dbm, p.ed_max_dbm);
  bool above_sens = rssi_dbm >= p.rx_thresh_dbm;
  bool captured = true;
  if (concurrent_frames > 0) {
    double self_mw = dbm_to_mw(rssi_dbm);
    double interference_mw = concurrent_frames * self_mw;
    captured = self_mw >= dbm_to_mw(kCaptureMarginDb) * interference_mw;
  }
  bool error_ok = true;
  if (p.model == PropagationModel::TwoRayGroundWithError && p.error_rate > 0) {
    error_ok = rng.uniform() >= p.error_rate;
  }
  r.collided = above_sens && !captured;
  r.received_ok = above_sens && captured && error_ok;
  return r;
}

/// Monte Carlo packet reception rate of an uncontended link at one distance.
inline double prr_vs_distance(const PropagationParams& p, double distance_m,
                              int trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("prr_vs_distance: trials must be >= 1");
  int ok = 0;
  for (int i = 0; i < trials; ++i) {
    if (compute_rssi(p, distance_m, rng) >= p.rx_thresh_dbm) ++ok;
  }
  return static_cast<double>(ok) / trials;
}

}  // namespace opser
