#pragma once

#include "opser/simulation.hpp"

namespace opser {

// ---------------------------------------------------------------------------
// OppBcast: pure opportunistic flood with a flat randomized holding window.
// No trust, no priorities, no unicast mode, no acknowledgments.
// ---------------------------------------------------------------------------

inline void Simulation::oppbcast_send(Node& n, Packet pkt) {
  pkt.cl = n.corona_level;
  pkt.mac_src = n.id;
  pkt.mac_dst = kBroadcastId;
  NodeId nid = n.id;
  FlowKey flow = pkt.flow();
  CsmaMac::OutFrame f;
  f.pkt = pkt;
  f.min_be = sc_.mac.mac_min_be;
  f.max_be = sc_.mac.mac_max_be;
  f.abort_key = flow;
  f.done = [this, nid, pkt](const TxAttemptResult& r) {
    if (r.outcome == TxOutcome::ChannelAccessFailure) {
      metrics_.on_caf();
      drop(node(nid), pkt, DropReason::Caf);
    }
  };
  n.mac.enqueue(std::move(f));
}

inline void Simulation::oppbcast_on_data(Node& n, const Packet& pkt, const RxReport& rx) {
  (void)rx;
  FlowKey flow = pkt.flow();

  // A heard copy withdraws our queued rebroadcast or pending timer.
  if (n.mac.abort(flow)) {
    n.seen.insert(flow);
    return;
  }
  if (auto it = n.contention.find(flow); it != n.contention.end()) {
    q_.cancel(it->second.timer);
    n.contention.erase(it);
    n.seen.insert(flow);
    if (trace_.enabled()) {
      trace_.line(q_.now(), n.id, "cxl").field("src", pkt.source_id).field("pid", pkt.packet_id);
    }
    return;
  }

  if (pkt.destination_id == n.id) {
    sink_deliver(n, pkt);
    return;
  }
  if (n.corona_level == 0) {
    drop(n, pkt, DropReason::NotInitialized);
    return;
  }
  if (pkt.destination_id != topo_.sink) {
    drop(n, pkt, DropReason::UnknownDestination);
    return;
  }
  if (n.seen.contains(flow)) {
    drop(n, pkt, DropReason::Duplicate);
    return;
  }
  if (n.corona_level > pkt.cl) {
    drop(n, pkt, DropReason::HigherCl);
    return;
  }
  if (!n.energy.is_eligible(power_)) {
    drop(n, pkt, DropReason::LowEnergy);
    return;
  }

  SimTime delay = SimTime::from_us(static_cast<std::int64_t>(
      n.rng_holding.uniform_int(static_cast<std::uint64_t>(sc_.contention_window().us))));
  ContentionEntry ce;
  ce.priority = 0;
  ce.expiry = q_.now() + delay;
  ce.pkt = pkt;
  NodeId nid = n.id;
  ce.timer = q_.schedule_in(delay, EventKind::TimerExpiry,
                            [this, nid, flow] { oppbcast_fire(node(nid), flow); });
  n.contention[flow] = ce;
}

inline void Simulation::oppbcast_fire(Node& n, FlowKey flow) {
  auto it = n.contention.find(flow);
  if (it == n.contention.end()) return;
  Packet pkt = it->second.pkt;
  n.contention.erase(it);
  if (!n.alive()) return;
  n.seen.insert(flow);
  oppbcast_send(n, pkt);
}

// ---------------------------------------------------------------------------
// GreedyUnicast: corona-greedy single-path unicast over the CID-learned
// table. Picks the lower-level neighbour with the best averaged LQI; no void
// recovery, no trust adaptation.
// ---------------------------------------------------------------------------

inline void Simulation::greedy_dispatch(Node& n, Packet pkt) {
  pkt.cl = n.corona_level;
  pkt.mac_src = n.id;
  const NeighborEntry* target = n.nt.best_lqi_lower(n.corona_level);
  if (!target) {
    drop(n, pkt, DropReason::NoRoute);
    return;
  }
  pkt.mac_dst = target->forwarder_id;
  if (trace_.enabled()) {
    trace_.line(q_.now(), n.id, "send")
        .field("src", pkt.source_id)
        .field("pid", pkt.packet_id)
        .field("mode", "uni")
        .field("to", target->forwarder_id);
  }
  NodeId nid = n.id;
  CsmaMac::OutFrame f;
  f.pkt = pkt;
  f.min_be = sc_.mac.mac_min_be;
  f.max_be = sc_.mac.mac_max_be;
  f.want_ack = true;
  f.done = [this, nid, pkt](const TxAttemptResult& r) {
    Node& nn = node(nid);
    switch (r.outcome) {
      case TxOutcome::Acked:
        break;
      case TxOutcome::ChannelAccessFailure:
        metrics_.on_caf();
        drop(nn, pkt, DropReason::Caf);
        break;
      case TxOutcome::Failed:
        drop(nn, pkt, DropReason::RetryExhausted);
        break;
      default:
        break;
    }
  };
  n.mac.enqueue(std::move(f));
}

inline void Simulation::greedy_on_data(Node& n, const Packet& pkt, const RxReport& rx) {
  (void)rx;
  if (pkt.mac_dst != n.id) return;  // greedy nodes ignore overheard traffic
  FlowKey flow = pkt.flow();
  if (pkt.destination_id == n.id) {
    sink_deliver(n, pkt);
    return;
  }
  if (n.corona_level == 0) {
    drop(n, pkt, DropReason::NotInitialized);
    return;
  }
  if (pkt.destination_id != topo_.sink) {
    drop(n, pkt, DropReason::UnknownDestination);
    return;
  }
  if (n.seen.contains(flow)) {
    drop(n, pkt, DropReason::Duplicate);
    return;
  }
  if (n.corona_level > pkt.cl) {
    drop(n, pkt, DropReason::HigherCl);
    return;
  }
  n.seen.insert(flow);
  greedy_dispatch(n, pkt);
}

}  // namespace opser
