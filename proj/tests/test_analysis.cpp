#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "opser/analysis.hpp"
#include "opser/rng.hpp"

using namespace opser;

TEST_CASE("single-candidate opportunistic delivery degenerates to the power form") {
  auto pr = HopLinkProfile::uniform({0.8}, 3);
  REQUIRE(opportunistic_delivery_prob(pr) == Catch::Approx(0.512));
  REQUIRE(unicast_delivery_prob(0.8, 3) == Catch::Approx(0.512));
}

TEST_CASE("two half links, one hop") {
  auto pr = HopLinkProfile::uniform({0.5, 0.5}, 1);
  REQUIRE(opportunistic_delivery_prob(pr) == Catch::Approx(0.75));
}

TEST_CASE("three candidates over two hops") {
  auto pr = HopLinkProfile::uniform({0.3, 0.4, 0.5}, 2);
  REQUIRE(opportunistic_delivery_prob(pr) == Catch::Approx(0.6241));
}

TEST_CASE("unit-probability links are rejected") {
  HopLinkProfile pr;
  pr.per_hop_link_probs = {{0.5, 1.0}};
  REQUIRE_THROWS_AS(opportunistic_delivery_prob(pr), std::invalid_argument);
  REQUIRE_THROWS_AS(unicast_delivery_prob(1.0, 2), std::invalid_argument);
}

TEST_CASE("unicast examples") {
  REQUIRE(unicast_delivery_prob(0.9, 1) == Catch::Approx(0.9));
  REQUIRE(unicast_delivery_prob(0.9, 5) == Catch::Approx(0.59049));
  REQUIRE(unicast_delivery_prob(0.0, 4) == 0.0);
}

TEST_CASE("closed form matches independent bernoulli monte carlo") {
  RngStream rng(314, 0);
  RngStream mc(314, 1);
  const int trials = 200000;
  for (int profile_i = 0; profile_i < 25; ++profile_i) {
    HopLinkProfile pr;
    int hops = 1 + static_cast<int>(rng.uniform_int(4));
    for (int h = 0; h < hops; ++h) {
      std::vector<double> cands;
      int deg = 1 + static_cast<int>(rng.uniform_int(4));
      for (int c = 0; c < deg; ++c) cands.push_back(rng.uniform() * 0.98);
      pr.per_hop_link_probs.push_back(cands);
    }
    double closed = opportunistic_delivery_prob(pr);
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
      bool alive = true;
      for (const auto& hop : pr.per_hop_link_probs) {
        bool any = false;
        for (double p : hop) {
          if (mc.uniform() < p) any = true;
        }
        if (!any) {
          alive = false;
          break;
        }
      }
      if (alive) ++ok;
    }
    double est = static_cast<double>(ok) / trials;
    double se = std::sqrt(std::max(closed * (1 - closed), 1e-12) / trials);
    REQUIRE(std::fabs(est - closed) <= 3 * se + 1e-9);
  }
}

TEST_CASE("opportunistic dominates unicast over random profiles") {
  RngStream rng(2718, 0);
  for (int i = 0; i < 10000; ++i) {
    HopLinkProfile pr;
    int hops = 1 + static_cast<int>(rng.uniform_int(5));
    for (int h = 0; h < hops; ++h) {
      std::vector<double> cands;
      int deg = 2 + static_cast<int>(rng.uniform_int(4));
      for (int c = 0; c < deg; ++c) cands.push_back(rng.uniform() * 0.99);
      pr.per_hop_link_probs.push_back(cands);
    }
    REQUIRE(delivery_prob_dominance_check(pr));
  }
}

TEST_CASE("dominance examples") {
  auto pr = HopLinkProfile::uniform({0.5, 0.5}, 3);
  REQUIRE(opportunistic_delivery_prob(pr) == Catch::Approx(0.421875));
  REQUIRE(unicast_delivery_prob(0.5, 3) == Catch::Approx(0.125));
  REQUIRE(delivery_prob_dominance_check(pr));

  // Single candidate: the two routes coincide.
  auto single = HopLinkProfile::uniform({0.7}, 2);
  REQUIRE(opportunistic_delivery_prob(single) ==
          Catch::Approx(unicast_delivery_prob(0.7, 2)));

  // A zero-probability extra candidate changes nothing.
  auto padded = HopLinkProfile::uniform({0.7, 0.0}, 2);
  REQUIRE(opportunistic_delivery_prob(padded) ==
          Catch::Approx(opportunistic_delivery_prob(single)));
}

TEST_CASE("adding a candidate or raising a probability never hurts") {
  RngStream rng(999, 0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> cands;
    int deg = 1 + static_cast<int>(rng.uniform_int(4));
    for (int c = 0; c < deg; ++c) cands.push_back(rng.uniform() * 0.95);
    int hops = 1 + static_cast<int>(rng.uniform_int(3));
    auto base = HopLinkProfile::uniform(cands, hops);
    double p0 = opportunistic_delivery_prob(base);

    auto extended = cands;
    extended.push_back(rng.uniform() * 0.95);
    REQUIRE(opportunistic_delivery_prob(HopLinkProfile::uniform(extended, hops)) >=
            p0 - 1e-15);

    auto raised = cands;
    std::size_t k = rng.uniform_int(raised.size());
    raised[k] = raised[k] + (0.99 - raised[k]) * 0.5;
    REQUIRE(opportunistic_delivery_prob(HopLinkProfile::uniform(raised, hops)) >=
            p0 - 1e-15);
  }
}

TEST_CASE("cid energy cost arithmetic") {
  // Lone sink: one transmission, nothing received.
  auto lone = cid_energy_cost(1, {0.0}, 66.19e-6, 57.12e-6);
  REQUIRE(lone.total_j == Catch::Approx(66.19e-6));

  // A node with subset degree 4.
  auto one = cid_energy_cost(1, {4.0}, 66.19e-6, 57.12e-6);
  REQUIRE(one.per_node_j[0] == Catch::Approx(294.67e-6));

  // The worst-case bound uses natural log by default.
  auto many = cid_energy_cost(121, std::vector<double>(121, 2.0), 1e-6, 1e-6);
  REQUIRE(many.bound_j == Catch::Approx(121e-6 + 121 * std::log(121.0) * 1e-6));

  REQUIRE_THROWS_AS(cid_energy_cost(2, {1.0}, 1e-6, 1e-6), std::invalid_argument);
  REQUIRE_THROWS_AS(cid_energy_cost(1, {1.0}, 1e-6, 1e-6, 0), std::invalid_argument);
}
