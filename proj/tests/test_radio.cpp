#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "opser/radio.hpp"

using namespace opser;

namespace {

PropagationParams table_params() {
  PropagationParams p;  // defaults mirror the simulation table
  return p;
}

double gaussian_tail(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("rssi at the reference distance is pt minus pl_d0") {
  PropagationParams p = table_params();
  p.sigma_db = 0.0;
  RngStream rng(1, 1);
  REQUIRE(compute_rssi(p, 1.0, rng) == Catch::Approx(p.pt_dbm - p.pl_d0_db));
}

TEST_CASE("deterministic path loss follows 10*beta*log10(d/d0)") {
  PropagationParams p = table_params();
  p.sigma_db = 0.0;
  RngStream rng(1, 1);
  // 10 m at beta 4.5: the log term contributes exactly 45 dB.
  REQUIRE(compute_rssi(p, 10.0, rng) == Catch::Approx(-p.pl_d0_db - 45.0));
}

TEST_CASE("degenerate geometry is rejected") {
  PropagationParams p = table_params();
  RngStream rng(1, 1);
  REQUIRE_THROWS_AS(compute_rssi(p, 0.0, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(compute_rssi(p, -3.0, rng), std::invalid_argument);
}

TEST_CASE("shadowing spread matches sigma") {
  PropagationParams p = table_params();
  RngStream rng(11, 3);
  const int n = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    double r = compute_rssi(p, 20.0, rng);
    sum += r;
    sum2 += r * r;
  }
  double mean = sum / n;
  double sd = std::sqrt(sum2 / n - mean * mean);
  REQUIRE(sd == Catch::Approx(4.0).margin(0.1));
}

TEST_CASE("lqi endpoints and midpoint") {
  REQUIRE(rssi_to_lqi(-110.0, -110.0, -45.0) == 0);
  REQUIRE(rssi_to_lqi(-45.0, -110.0, -45.0) == 255);
  // Midpoint maps to 127.5 and rounds half up.
  REQUIRE(rssi_to_lqi(-77.5, -110.0, -45.0) == 128);
  // Clamping absorbs out-of-range values.
  REQUIRE(rssi_to_lqi(-200.0, -110.0, -45.0) == 0);
  REQUIRE(rssi_to_lqi(0.0, -110.0, -45.0) == 255);
}

TEST_CASE("lqi mapping is monotone across a fine rssi sweep") {
  int prev = -1;
  for (double rssi = -130.0; rssi <= -30.0; rssi += 0.1) {
    int lqi = rssi_to_lqi(rssi, -110.0, -45.0);
    REQUIRE(lqi >= prev);
    prev = lqi;
  }
  REQUIRE(prev == 255);
}

TEST_CASE("reception requires sensitivity and capture") {
  PropagationParams p = table_params();
  RngStream rng(5, 5);

  auto weak = reception_decision(p, -120.0, 0, rng);
  REQUIRE_FALSE(weak.received_ok);
  REQUIRE_FALSE(weak.collided);

  auto clean = reception_decision(p, -80.0, 0, rng);
  REQUIRE(clean.received_ok);

  // Two exactly overlapping frames with equal power: no capture at 0 dB.
  auto collided = reception_decision(p, -80.0, 1, rng);
  REQUIRE_FALSE(collided.received_ok);
  REQUIRE(collided.collided);
}

TEST_CASE("two-ray model is deterministic and error-free at rate zero") {
  PropagationParams p;
  p.model = PropagationModel::TwoRayGroundWithError;
  p.error_rate = 0.0;
  RngStream rng(9, 9);
  double r1 = compute_rssi(p, 12.0, rng);
  double r2 = compute_rssi(p, 12.0, rng);
  REQUIRE(r1 == r2);
  if (r1 >= p.rx_thresh_dbm) {
    auto rep = reception_decision(p, r1, 0, rng);
    REQUIRE(rep.received_ok);
  }
  // Deterministic range boundary: inside is above sensitivity.
  REQUIRE(compute_rssi(p, 10.0, rng) > p.rx_thresh_dbm);
  REQUIRE(compute_rssi(p, 100.0, rng) < p.rx_thresh_dbm);
}

TEST_CASE("prr is a step function without shadowing") {
  PropagationParams p = table_params();
  p.sigma_db = 0.0;
  RngStream rng(2, 7);
  // Deterministic range: pt - pl0 - 45*log10(d) >= -110  =>  d < ~35.8 m.
  REQUIRE(prr_vs_distance(p, 30.0, 100, rng) == 1.0);
  REQUIRE(prr_vs_distance(p, 40.0, 100, rng) == 0.0);
}

TEST_CASE("prr matches the closed-form gaussian tail and shows a transitional band") {
  PropagationParams p = table_params();  // beta 4.5, sigma 4
  RngStream rng(23, 1);
  const int trials = 10000;
  bool in_band = false;
  for (double d = 20.0; d <= 55.0; d += 2.5) {
    double mu = p.pt_dbm - p.pl_d0_db - 10.0 * p.beta * std::log10(d / p.d0_m);
    double expected = gaussian_tail((mu - p.rx_thresh_dbm) / p.sigma_db);
    double got = prr_vs_distance(p, d, trials, rng);
    double se = std::sqrt(std::max(expected * (1 - expected), 1e-12) / trials);
    REQUIRE(std::fabs(got - expected) <= 3 * se + 1e-9);
    if (got > 0.1 && got < 0.9) in_band = true;
  }
  REQUIRE(in_band);
}

TEST_CASE("prr decreases with distance in expectation under shadowing") {
  PropagationParams p = table_params();
  RngStream rng(31, 4);
  double prev = 1.1;
  for (double d : {15.0, 25.0, 35.0, 45.0, 60.0}) {
    double v = prr_vs_distance(p, d, 20000, rng);
    REQUIRE(v <= prev + 0.02);  // statistical tolerance
    prev = v;
  }
}
