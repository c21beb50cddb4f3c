#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <unordered_map>
#include <vector>

#include "opser/energy.hpp"
#include "opser/event_queue.hpp"
#include "opser/fuzzy.hpp"
#include "opser/mac.hpp"
#include "opser/packet.hpp"
#include "opser/rng.hpp"
#include "opser/trust.hpp"
#include "opser/types.hpp"

namespace opser {

/// Bounded LRU of (source, packet_id) pairs for duplicate detection.
class SeenCache {
 public:
  explicit SeenCache(std::size_t capacity = 256) : cap_(capacity) {}

  bool contains(FlowKey k) const { return map_.count(k) > 0; }

  void insert(FlowKey k) {
    auto it = map_.find(k);
    if (it != map_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    order_.push_front(k);
    map_[k] = order_.begin();
    if (map_.size() > cap_) {
      map_.erase(order_.back());
      order_.pop_back();
    }
  }

  std::size_t size() const { return map_.size(); }

 private:
  std::size_t cap_;
  std::list<FlowKey> order_;
  std::unordered_map<FlowKey, std::list<FlowKey>::iterator> map_;
};

/// One frame currently on the air at a given receiver.
struct ActiveFrame {
  std::uint64_t frame_id = 0;
  Packet pkt;
  double rssi_dbm = 0.0;
  double rssi_mw = 0.0;
  SimTime start{};
  SimTime end{};
  double interference_mw = 0.0;  // accumulated power of overlapping frames
  bool rx_capable = false;       // receiver stayed receive-capable throughout
  bool error_drop = false;       // model-2 per-packet error draw
};

enum class RouteStatus : std::uint8_t { Active, Failed };

/// One origination or forward in flight: either an opportunistic broadcast
/// awaiting its passive ACK, or a unicast awaiting the MAC verdict.
struct PendingSend {
  Packet pkt;
  bool opportunistic = true;
  bool from_origination = false;
  int rebroadcasts_left = 0;  // passive-ACK timeout retries remaining
  NodeId unicast_target = 0;
  int min_be = 3;
  int max_be = 5;
  bool transmitted_once = false;
  EventQueue::Handle passive_timer{};
};

/// A scheduled DHD (or baseline contention-window) forwarding timer.
struct ContentionEntry {
  EventQueue::Handle timer{};
  int priority = 0;
  SimTime expiry{};
  Packet pkt;
  int min_be = 3;
  int max_be = 5;
};

/// Full per-node state: corona level, route status, neighbour table, energy
/// account, MAC, per-purpose random streams and the in-flight bookkeeping.
struct Node {
  NodeId id = 0;
  EnergyAccount energy;
  CsmaMac mac;
  RngStream rng_channel;
  RngStream rng_backoff;
  RngStream rng_holding;
  RngStream rng_traffic;

  int corona_level = 0;  // 0 = unset; sink = 1
  RouteStatus route_status = RouteStatus::Active;
  NeighborTable nt;
  SeenCache seen{256};
  std::uint32_t packet_counter = 0;
  std::vector<std::uint32_t> cid_seqs_seen;

  std::map<FlowKey, PendingSend> pending;
  std::map<FlowKey, ContentionEntry> contention;
  std::vector<ActiveFrame> active_frames;
  EventQueue::Handle wake_timer{};

  bool is_sink = false;
  bool is_source = false;

  bool alive() const { return !energy.dead(); }
  RadioState radio_state() const { return energy.state(); }

  bool cid_seq_known(std::uint32_t seq) const {
    for (auto s : cid_seqs_seen)
      if (s == seq) return true;
    return false;
  }
};

}  // namespace opser
