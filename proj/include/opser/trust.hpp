#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "opser/types.hpp"

namespace opser {

enum class TrustEvent : std::uint8_t { Success, Failure, OpportunisticWinReset };

/// Multiplicative trust ladder: +10% on success capped at 1, -50% on failure,
/// hard reset to 0.5 when a previously penalized forwarder wins opportunistic
/// contention again.
inline double trust_update(double tv, TrustEvent e) {
  switch (e) {
    case TrustEvent::Success:
      return std::min(1.0, tv * 1.1);
    case TrustEvent::Failure:
      return tv * 0.5;
    case TrustEvent::OpportunisticWinReset:
      return 0.5;
  }
  return tv;
}

inline constexpr double kTrustInitial = 0.5;
inline constexpr double kTrustworthyThreshold = 0.5;  // trust >= 0.5 counts

struct NeighborEntry {
  NodeId forwarder_id = 0;
  double trust_value = kTrustInitial;
  double lqi_avg = 0.0;       // arithmetic running mean of reverse-link LQI
  std::uint32_t lqi_samples = 0;
  int corona_level = 0;
  NodeId destination_id = 0;
  std::uint32_t seq_num = 0;
  NodeId next_hop_id = 0;

  void add_lqi_sample(double lqi) {
    ++lqi_samples;
    lqi_avg += (lqi - lqi_avg) / lqi_samples;
  }
};

/// Per-node neighbour table, insertion-ordered for determinism.
class NeighborTable {
 public:
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<NeighborEntry>& entries() const { return entries_; }

  NeighborEntry* find(NodeId id) {
    for (auto& e : entries_)
      if (e.forwarder_id == id) return &e;
    return nullptr;
  }
  const NeighborEntry* find(NodeId id) const {
    return const_cast<NeighborTable*>(this)->find(id);
  }

  NeighborEntry& add(const NeighborEntry& e) {
    entries_.push_back(e);
    return entries_.back();
  }

  NeighborEntry& get_or_add(NodeId id) {
    if (auto* e = find(id)) return *e;
    NeighborEntry fresh;
    fresh.forwarder_id = id;
    return add(fresh);
  }

  /// Highest trust among candidates at a lower corona level (unicast
  /// eligibility pool). Returns 0 when the pool is empty.
  double max_trust_lower(int own_cl) const {
    double best = 0.0;
    for (const auto& e : entries_)
      if (e.corona_level < own_cl) best = std::max(best, e.trust_value);
    return best;
  }

  /// Count of trustworthy (trust >= 0.5) lower-level candidates; the node's
  /// forwarding degree for the trust-degree metric.
  int trustworthy_lower_count(int own_cl) const {
    int n = 0;
    for (const auto& e : entries_)
      if (e.corona_level < own_cl && e.trust_value >= kTrustworthyThreshold) ++n;
    return n;
  }

  /// Unicast next hop: max trust among lower-level entries with trust >= 0.5
  /// and averaged LQI at or above the lower threshold. Ties break on the
  /// lowest node id.
  const NeighborEntry* best_unicast_candidate(int own_cl, double lqi_tl) const {
    const NeighborEntry* best = nullptr;
    for (const auto& e : entries_) {
      if (e.corona_level >= own_cl) continue;
      if (e.trust_value < kTrustworthyThreshold) continue;
      if (e.lqi_avg < lqi_tl) continue;
      if (!best || e.trust_value > best->trust_value ||
          (e.trust_value == best->trust_value && e.forwarder_id < best->forwarder_id)) {
        best = &e;
      }
    }
    return best;
  }

  /// Greedy pick: lower-level entry with maximal averaged LQI, ties by
  /// lowest node id. No trust involved.
  const NeighborEntry* best_lqi_lower(int own_cl) const {
    const NeighborEntry* best = nullptr;
    for (const auto& e : entries_) {
      if (e.corona_level >= own_cl) continue;
      if (!best || e.lqi_avg > best->lqi_avg ||
          (e.lqi_avg == best->lqi_avg && e.forwarder_id < best->forwarder_id)) {
        best = &e;
      }
    }
    return best;
  }

 private:
  std::vector<NeighborEntry> entries_;
};

}  // namespace opser
