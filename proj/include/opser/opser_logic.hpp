#pragma once

#include "opser/simulation.hpp"

namespace opser {

inline void Simulation::apply_trust(Node& n, NodeId neighbor, TrustEvent ev) {
  auto* e = n.nt.find(neighbor);
  if (!e) return;
  e->trust_value = trust_update(e->trust_value, ev);
  if (trace_.enabled()) {
    trace_.line(q_.now(), n.id, "trust").field("nbr", neighbor).field("tv", e->trust_value);
  }
}

/// Mode selection and hand-off to the MAC (Send/Forward data paths share it).
/// Opportunistic when this is the source's very first packet, the route is
/// marked failed, or no lower-level candidate is trustworthy; unicast to the
/// max-trust candidate otherwise. Candidates that all fail the LQI gate fall
/// back to opportunistic rather than stalling.
inline void Simulation::opser_dispatch_send(Node& n, Packet pkt, bool origination,
                                            int min_be, int max_be,
                                            bool force_opportunistic) {
  pkt.cl = n.corona_level;
  pkt.mac_src = n.id;
  FlowKey flow = pkt.flow();

  bool opportunistic = force_opportunistic;
  if (!opportunistic) {
    double max_tv = n.nt.max_trust_lower(n.corona_level);
    opportunistic = (origination && pkt.packet_id == 1) ||
                    n.route_status == RouteStatus::Failed ||
                    max_tv < kTrustworthyThreshold;
  }
  const NeighborEntry* target = nullptr;
  if (!opportunistic) {
    target = n.nt.best_unicast_candidate(n.corona_level, sc_.lqi_tl);
    if (!target) opportunistic = true;
  }

  PendingSend ps;
  ps.pkt = pkt;
  ps.from_origination = origination;
  ps.min_be = min_be;
  ps.max_be = max_be;

  if (opportunistic) {
    ps.opportunistic = true;
    ps.pkt.mac_dst = kBroadcastId;
    ps.rebroadcasts_left = sc_.mac.mac_retries;
    n.pending[flow] = ps;
    if (trace_.enabled()) {
      trace_.line(q_.now(), n.id, "send")
          .field("src", pkt.source_id)
          .field("pid", pkt.packet_id)
          .field("mode", "opp");
    }
    opser_enqueue_broadcast(n, flow);
  } else {
    ps.opportunistic = false;
    ps.pkt.mac_dst = target->forwarder_id;
    ps.unicast_target = target->forwarder_id;
    n.pending[flow] = ps;
    if (trace_.enabled()) {
      trace_.line(q_.now(), n.id, "send")
          .field("src", pkt.source_id)
          .field("pid", pkt.packet_id)
          .field("mode", "uni")
          .field("to", target->forwarder_id);
    }
    NodeId nid = n.id;
    CsmaMac::OutFrame f;
    f.pkt = n.pending[flow].pkt;
    f.min_be = min_be;
    f.max_be = max_be;
    f.want_ack = true;
    f.abort_key = flow;
    f.done = [this, nid, flow](const TxAttemptResult& r) {
      opser_unicast_done(node(nid), flow, r);
    };
    n.mac.enqueue(std::move(f));
  }
}

inline void Simulation::opser_enqueue_broadcast(Node& n, FlowKey flow) {
  auto it = n.pending.find(flow);
  if (it == n.pending.end()) return;
  NodeId nid = n.id;
  CsmaMac::OutFrame f;
  f.pkt = it->second.pkt;
  f.min_be = it->second.min_be;
  f.max_be = it->second.max_be;
  f.abort_key = flow;
  f.done = [this, nid, flow](const TxAttemptResult& r) {
    opser_broadcast_done(node(nid), flow, r);
  };
  n.mac.enqueue(std::move(f));
}

inline void Simulation::opser_broadcast_done(Node& n, FlowKey flow,
                                             const TxAttemptResult& r) {
  auto it = n.pending.find(flow);
  if (it == n.pending.end()) return;
  switch (r.outcome) {
    case TxOutcome::Sent: {
      it->second.transmitted_once = true;
      NodeId nid = n.id;
      it->second.passive_timer = q_.schedule_in(
          sc_.dhd_max(), EventKind::TimerExpiry,
          [this, nid, flow] { opser_passive_timeout(node(nid), flow); });
      break;
    }
    case TxOutcome::ChannelAccessFailure:
      metrics_.on_caf();
      if (trace_.enabled()) {
        trace_.line(q_.now(), n.id, "caf")
            .field("src", it->second.pkt.source_id)
            .field("pid", it->second.pkt.packet_id);
      }
      drop(n, it->second.pkt, DropReason::Caf);
      n.pending.erase(it);
      break;
    case TxOutcome::Aborted:
      // Another forwarder carried the packet while ours was still queued.
      n.pending.erase(it);
      break;
    default:
      break;
  }
}

/// Passive-ACK window expired: retry the broadcast or give the packet up.
inline void Simulation::opser_passive_timeout(Node& n, FlowKey flow) {
  auto it = n.pending.find(flow);
  if (it == n.pending.end()) return;
  it->second.passive_timer = {};
  if (!n.alive()) {
    n.pending.erase(it);
    return;
  }
  if (trace_.enabled()) {
    trace_.line(q_.now(), n.id, "pto")
        .field("src", it->second.pkt.source_id)
        .field("pid", it->second.pkt.packet_id)
        .field("left", it->second.rebroadcasts_left);
  }
  if (it->second.rebroadcasts_left > 0) {
    --it->second.rebroadcasts_left;
    opser_enqueue_broadcast(n, flow);
    return;
  }
  drop(n, it->second.pkt, DropReason::RetryExhausted);
  n.pending.erase(it);
}

/// A neighbour relayed our pending opportunistic packet (or the sink
/// acknowledged it): confirm delivery progress, learn/boost the forwarder
/// and clear the route-failed flag.
inline void Simulation::opser_passive_success(Node& n, FlowKey flow, NodeId forwarder,
                                              int forwarder_cl, double lqi) {
  auto it = n.pending.find(flow);
  if (it == n.pending.end()) return;
  q_.cancel(it->second.passive_timer);
  Packet pkt = it->second.pkt;
  n.pending.erase(it);

  if (auto* e = n.nt.find(forwarder)) {
    e->corona_level = forwarder_cl;
    TrustEvent ev = e->trust_value < kTrustworthyThreshold
                        ? TrustEvent::OpportunisticWinReset
                        : TrustEvent::Success;
    apply_trust(n, forwarder, ev);
  } else {
    NeighborEntry fresh;
    fresh.forwarder_id = forwarder;
    fresh.trust_value = kTrustInitial;
    fresh.corona_level = forwarder_cl;
    fresh.destination_id = topo_.sink;
    fresh.add_lqi_sample(lqi);
    n.nt.add(fresh);
  }
  if (n.route_status == RouteStatus::Failed) n.route_status = RouteStatus::Active;
  if (trace_.enabled()) {
    trace_.line(q_.now(), n.id, "pak")
        .field("src", pkt.source_id)
        .field("pid", pkt.packet_id)
        .field("by", forwarder);
  }
}

inline void Simulation::opser_unicast_done(Node& n, FlowKey flow,
                                           const TxAttemptResult& r) {
  auto it = n.pending.find(flow);
  if (it == n.pending.end()) return;
  NodeId target = it->second.unicast_target;
  Packet pkt = it->second.pkt;
  switch (r.outcome) {
    case TxOutcome::Acked:
      apply_trust(n, target, TrustEvent::Success);
      n.pending.erase(it);
      break;
    case TxOutcome::ChannelAccessFailure:
      metrics_.on_caf();
      [[fallthrough]];
    case TxOutcome::Failed:
      // Link-level failure: halve the forwarder's trust, mark the route
      // failed, and push this same packet out opportunistically.
      apply_trust(n, target, TrustEvent::Failure);
      n.route_status = RouteStatus::Failed;
      n.pending.erase(it);
      if (n.alive()) {
        opser_dispatch_send(n, pkt, false, sc_.mac.mac_min_be, sc_.mac.mac_max_be, true);
      }
      break;
    case TxOutcome::Aborted:
      n.pending.erase(it);
      break;
    default:
      break;
  }
}

inline void Simulation::opser_on_data(Node& n, const Packet& pkt, const RxReport& rx) {
  FlowKey flow = pkt.flow();

  // Pending-send hooks: a heard copy either suppresses our queued frame or
  // confirms our transmitted broadcast.
  if (auto it = n.pending.find(flow); it != n.pending.end()) {
    if (n.mac.abort(flow)) return;  // done(Aborted) cleared the entry
    if (it->second.opportunistic && it->second.transmitted_once) {
      opser_passive_success(n, flow, pkt.mac_src, pkt.cl, rx.lqi);
    }
    return;
  }

  // Contention cancellation: someone else forwarded first.
  if (auto it = n.contention.find(flow); it != n.contention.end()) {
    q_.cancel(it->second.timer);
    n.contention.erase(it);
    n.seen.insert(flow);
    if (trace_.enabled()) {
      trace_.line(q_.now(), n.id, "cxl").field("src", pkt.source_id).field("pid", pkt.packet_id);
    }
    return;
  }

  if (pkt.mac_dst == n.id) {
    opser_recv_unicast(n, pkt, rx);
  } else if (pkt.mac_dst == kBroadcastId) {
    opser_recv_broadcast(n, pkt, rx);
  }
  // Overheard unicast for someone else carries no duty here.
}

/// Explicit ACKs confirm pending opportunistic sends (the sink acknowledges
/// broadcast deliveries); unicast pendings are settled by the MAC instead.
inline void Simulation::opser_on_ack(Node& n, const Packet& ack, const RxReport& rx) {
  FlowKey flow = make_flow_key(ack.source_id, ack.packet_id);
  auto it = n.pending.find(flow);
  if (it == n.pending.end() || !it->second.opportunistic) return;
  if (!it->second.transmitted_once) return;
  opser_passive_success(n, flow, ack.mac_src, 1, rx.lqi);  // explicit ACKs come from the sink
}

inline void Simulation::opser_recv_broadcast(Node& n, const Packet& pkt,
                                             const RxReport& rx) {
  FlowKey flow = pkt.flow();
  if (pkt.destination_id == n.id) {
    sink_deliver(n, pkt);
    send_ack_bypass(n, pkt.mac_src, pkt.source_id, pkt.packet_id);
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
  int tc = n.nt.trustworthy_lower_count(n.corona_level);
  if (tc == 0) {
    drop(n, pkt, DropReason::NoRoute);  // no trustworthy downstream: sit out
    return;
  }
  bool same_level = n.corona_level == pkt.cl;
  LqiBand band = lqi_normalize(rx.lqi, sc_.lqi_tl, sc_.lqi_th);
  FuzzyDecision fd = fuzzy_priority(band, trust_degree(tc), same_level);
  SimTime dhd = compute_dhd(fd.priority_level, sc_.hold_t(), n.rng_holding);

  ContentionEntry ce;
  ce.priority = fd.priority_level;
  ce.expiry = q_.now() + dhd;
  ce.pkt = pkt;
  ce.min_be = fd.mac_min_be;
  ce.max_be = fd.mac_max_be;
  NodeId nid = n.id;
  ce.timer = q_.schedule_in(dhd, EventKind::TimerExpiry,
                            [this, nid, flow] { opser_dhd_fire(node(nid), flow); });
  n.contention[flow] = ce;
  if (trace_.enabled()) {
    trace_.line(q_.now(), n.id, "dhd")
        .field("src", pkt.source_id)
        .field("pid", pkt.packet_id)
        .field("prio", fd.priority_level)
        .field("delay_us", dhd.us)
        .field("expire", ce.expiry.us);
  }
}

inline void Simulation::opser_dhd_fire(Node& n, FlowKey flow) {
  auto it = n.contention.find(flow);
  if (it == n.contention.end()) return;
  ContentionEntry ce = it->second;
  n.contention.erase(it);
  if (!n.alive()) return;
  n.seen.insert(flow);
  if (trace_.enabled()) {
    trace_.line(q_.now(), n.id, "fire")
        .field("src", ce.pkt.source_id)
        .field("pid", ce.pkt.packet_id)
        .field("prio", ce.priority);
  }
  opser_dispatch_send(n, ce.pkt, false, ce.min_be, ce.max_be, false);
}

/// Unicast arrival addressed to this node: the MAC ACK already went out;
/// forward onward with standard backoff bounds.
inline void Simulation::opser_recv_unicast(Node& n, const Packet& pkt,
                                           const RxReport& rx) {
  (void)rx;
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
  if (!n.energy.is_eligible(power_)) {
    drop(n, pkt, DropReason::LowEnergy);
    return;
  }
  n.seen.insert(flow);
  opser_dispatch_send(n, pkt, false, sc_.mac.mac_min_be, sc_.mac.mac_max_be, false);
}

}  // namespace opser
