#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "opser/types.hpp"

namespace opser {

/// Link delivery probabilities of the forwarding candidates at every hop of
/// a source-to-sink path. The classic closed form uses one candidate set
/// replicated across all hops; heterogeneous per-hop sets generalize it and
/// reduce to the same expression when every hop shares one set.
struct HopLinkProfile {
  std::vector<std::vector<double>> per_hop_link_probs;

  std::size_t n_hops() const { return per_hop_link_probs.size(); }

  void validate() const {
    if (per_hop_link_probs.empty())
      throw std::invalid_argument("profile: needs at least one hop");
    for (const auto& hop : per_hop_link_probs) {
      if (hop.empty()) throw std::invalid_argument("profile: empty candidate set");
      for (double p : hop) {
        if (p < 0.0 || p >= 1.0)
          throw std::invalid_argument("profile: probabilities must lie in [0, 1)");
      }
    }
  }

  /// Replicates one candidate set across n hops (the textbook form).
  static HopLinkProfile uniform(std::vector<double> candidates, std::size_t n_hops) {
    HopLinkProfile pr;
    pr.per_hop_link_probs.assign(n_hops, std::move(candidates));
    return pr;
  }
};

/// End-to-end delivery probability under opportunistic forwarding: at each
/// hop the packet survives when at least one candidate receives it.
inline double opportunistic_delivery_prob(const HopLinkProfile& profile) {
  profile.validate();
  double total = 1.0;
  for (const auto& hop : profile.per_hop_link_probs) {
    double all_miss = 1.0;
    for (double p : hop) all_miss *= (1.0 - p);
    total *= (1.0 - all_miss);
  }
  return total;
}

/// End-to-end delivery probability when a single best candidate is used at
/// every hop.
inline double unicast_delivery_prob(double p, int n_hops) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("unicast: p must lie in [0, 1)");
  if (n_hops < 1) throw std::invalid_argument("unicast: n_hops must be >= 1");
  return std::pow(p, n_hops);
}

/// Opportunistic forwarding never loses to single-path forwarding over the
/// same candidates; strict whenever any non-best candidate helps.
inline bool delivery_prob_dominance_check(const HopLinkProfile& profile) {
  profile.validate();
  double p_o = opportunistic_delivery_prob(profile);
  double p_u = 1.0;
  for (const auto& hop : profile.per_hop_link_probs) {
    double best = 0.0;
    for (double p : hop) best = std::max(best, p);
    p_u *= best;
  }
  return p_o >= p_u;
}

struct CidEnergyCost {
  std::vector<double> per_node_j;
  double total_j = 0.0;
  double bound_j = 0.0;  // N*E_tx + N*log(N)*E_rx
};

/// Flood energy model: each node transmits the interest once per round and
/// pays reception cost proportional to its subset degree. Degrees may be
/// fractional (measured occupancy / airtime). The worst-case bound uses
/// log(N); base defaults to natural log.
inline CidEnergyCost cid_energy_cost(std::size_t n_nodes,
                                     const std::vector<double>& degrees,
                                     double e_tx_j, double e_rx_j, int rounds = 1,
                                     double log_base = 2.718281828459045235) {
  if (rounds < 1) throw std::invalid_argument("cid_energy_cost: rounds must be >= 1");
  if (degrees.size() != n_nodes)
    throw std::invalid_argument("cid_energy_cost: one degree per node required");
  CidEnergyCost out;
  out.per_node_j.reserve(n_nodes);
  for (double deg : degrees) {
    double per = rounds * (e_tx_j + deg * e_rx_j);
    out.per_node_j.push_back(per);
    out.total_j += per;
  }
  double n = static_cast<double>(n_nodes);
  double log_n = n_nodes > 1 ? std::log(n) / std::log(log_base) : 0.0;
  out.bound_j = n * e_tx_j + n * log_n * e_rx_j;
  return out;
}

}  // namespace opser
