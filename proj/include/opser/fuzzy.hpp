#pragma once

#include <cstdint>
#include <stdexcept>

#include "opser/rng.hpp"
#include "opser/types.hpp"

namespace opser {

enum class LqiBand : std::uint8_t { Low, Med, High };
enum class TrustDegree : std::uint8_t { High, Low, Ineligible };

inline const char* lqi_band_name(LqiBand b) {
  switch (b) {
    case LqiBand::Low: return "LOW";
    case LqiBand::Med: return "MED";
    case LqiBand::High: return "HIGH";
  }
  return "?";
}

struct FuzzyDecision {
  LqiBand lqi_norm = LqiBand::Low;
  TrustDegree deg_trust = TrustDegree::Low;
  int priority_level = 7;
  int mac_min_be = 8;
  int mac_max_be = 10;
};

/// Crisp LQI to fuzzy band: LOW at or below the lower threshold, HIGH at or
/// above the upper, MED strictly between.
inline LqiBand lqi_normalize(int lqi, int lqi_tl, int lqi_th) {
  if (lqi_tl >= lqi_th) throw std::invalid_argument("lqi_normalize: requires lqi_tl < lqi_th");
  if (lqi <= lqi_tl) return LqiBand::Low;
  if (lqi >= lqi_th) return LqiBand::High;
  return LqiBand::Med;
}

/// Trust degree from the count of trustworthy forwarding candidates: HIGH
/// above two, LOW at one or two, Ineligible at zero (such nodes sit out the
/// timer contention entirely).
inline TrustDegree trust_degree(int trustworthy_count) {
  if (trustworthy_count > 2) return TrustDegree::High;
  if (trustworthy_count >= 1) return TrustDegree::Low;
  return TrustDegree::Ineligible;
}

/// Multi-metric decision table mapping (LQI band, trust degree) to the
/// forwarding priority and its differentiated backoff-exponent bounds. The
/// same-level void fallback gets priority 7 with bounds (8, 10).
inline FuzzyDecision fuzzy_priority(LqiBand lqi_norm, TrustDegree deg_trust,
                                    bool same_level_fallback) {
  FuzzyDecision d;
  d.lqi_norm = lqi_norm;
  d.deg_trust = deg_trust;
  if (same_level_fallback) {
    d.priority_level = 7;
    d.mac_min_be = 8;
    d.mac_max_be = 10;
    return d;
  }
  if (deg_trust == TrustDegree::Ineligible) {
    throw std::invalid_argument("fuzzy_priority: ineligible candidate has no priority");
  }
  bool high_trust = deg_trust == TrustDegree::High;
  switch (lqi_norm) {
    case LqiBand::High:
      d.priority_level = high_trust ? 1 : 2;
      break;
    case LqiBand::Med:
      d.priority_level = high_trust ? 3 : 4;
      break;
    case LqiBand::Low:
      d.priority_level = high_trust ? 5 : 6;
      break;
  }
  d.mac_min_be = d.priority_level + 1;
  d.mac_max_be = d.priority_level + 3;
  return d;
}

/// Dynamic holding delay: (priority - 1) * T plus a uniform jitter in [0, T),
/// keeping the per-priority bands disjoint.
inline SimTime compute_dhd(int priority, SimTime hold_t, RngStream& rng) {
  if (hold_t.us <= 0) throw std::invalid_argument("compute_dhd: holding time must be > 0");
  std::int64_t tau = static_cast<std::int64_t>(
      rng.uniform_int(static_cast<std::uint64_t>(hold_t.us)));
  return SimTime{(priority - 1) * hold_t.us + tau};
}

}  // namespace opser
