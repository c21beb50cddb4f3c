#pragma once

#include <climits>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "opser/event_queue.hpp"
#include "opser/metrics.hpp"
#include "opser/node.hpp"
#include "opser/radio.hpp"
#include "opser/scenario.hpp"
#include "opser/trace.hpp"

namespace opser {

/// Run-level counters and the records needed to finalize a MetricsRecord.
class MetricsCollector {
 public:
  void on_generated(FlowKey flow, SimTime t) {
    ++sent_;
    gen_time_.emplace(flow, t);
  }

  /// Registers a DATA transmission start; flags it as a duplicate when some
  /// other node already transmitted this flow at an equal or lower corona
  /// level (its forwarding duty was already covered).
  bool note_data_tx(NodeId node, int cl, FlowKey flow) {
    auto& ts = txseen_[flow];
    bool dup = false;
    if (ts.min_node != kBroadcastId) {
      if (ts.min_node != node) {
        dup = ts.min_cl <= cl;
      } else {
        dup = ts.second_cl <= cl;
      }
    }
    if (dup) ++dup_tx_;
    if (ts.min_node == kBroadcastId) {
      ts.min_node = node;
      ts.min_cl = cl;
    } else if (node == ts.min_node) {
      ts.min_cl = std::min(ts.min_cl, cl);
    } else if (cl < ts.min_cl) {
      ts.second_cl = ts.min_cl;
      ts.min_cl = cl;
      ts.min_node = node;
    } else {
      ts.second_cl = std::min(ts.second_cl, cl);
    }
    return dup;
  }

  /// Returns true when this is the first copy at the sink.
  bool on_delivery(FlowKey flow, SimTime t) {
    if (delivered_.count(flow)) {
      ++dup_sink_;
      return false;
    }
    delivered_.emplace(flow, t);
    auto it = gen_time_.find(flow);
    double delay_s = it != gen_time_.end() ? (t - it->second).seconds() : 0.0;
    delays_s_.push_back(delay_s);
    return true;
  }

  SimTime gen_time(FlowKey flow) const {
    auto it = gen_time_.find(flow);
    return it != gen_time_.end() ? it->second : SimTime{};
  }

  void on_caf() { ++caf_; }
  void on_drop(DropReason r) { ++drops_[static_cast<std::size_t>(r)]; }

  std::uint64_t caf_count() const { return caf_; }
  std::uint64_t duplicate_tx() const { return dup_tx_; }

  MetricsRecord finalize(const std::vector<std::unique_ptr<Node>>& nodes) const {
    MetricsRecord r;
    r.sent_by_sources = sent_;
    r.received_at_sink = delivered_.size();
    r.duplicates_at_sink = dup_sink_;
    r.duplicate_tx = dup_tx_;
    r.caf_count = caf_;
    r.per_packet_delay_s = delays_s_;
    r.n_nodes = static_cast<std::uint32_t>(nodes.size());
    double tec = 0.0;
    for (const auto& n : nodes) tec += n->energy.e_initial_j() - n->energy.e_rem_j();
    r.tec_j = tec;
    for (std::size_t i = 0; i < drops_.size(); ++i) {
      if (drops_[i] > 0)
        r.drops_by_reason[drop_reason_name(static_cast<DropReason>(i))] = drops_[i];
    }
    return r;
  }

 private:
  struct TxSeen {
    int min_cl = INT_MAX;
    NodeId min_node = kBroadcastId;
    int second_cl = INT_MAX;  // best corona level from a different node
  };

  std::uint64_t sent_ = 0;
  std::uint64_t dup_sink_ = 0;
  std::uint64_t dup_tx_ = 0;
  std::uint64_t caf_ = 0;
  std::unordered_map<FlowKey, SimTime> gen_time_;
  std::unordered_map<FlowKey, SimTime> delivered_;
  std::vector<double> delays_s_;
  std::unordered_map<FlowKey, TxSeen> txseen_;
  std::array<std::uint64_t, 10> drops_{};
};

/// The simulator: wires the scenario's topology, radio, MAC, energy and
/// protocol logic onto the event queue and runs one seeded lifecycle.
class Simulation {
 public:
  Simulation(const Scenario& scenario, std::uint64_t seed, std::ostream* trace_out = nullptr)
      : sc_(scenario), seed_(seed), trace_(trace_out) {
    sc_.seed = seed;
    setup();
  }

  explicit Simulation(const Scenario& scenario, std::ostream* trace_out = nullptr)
      : Simulation(scenario, scenario.seed, trace_out) {}

  EventQueue& queue() { return q_; }
  Node& node(NodeId id) { return *nodes_.at(id); }
  const Topology& topology() const { return topo_; }
  NodeId sink() const { return topo_.sink; }
  std::size_t n_nodes() const { return nodes_.size(); }
  const Scenario& scenario() const { return sc_; }
  const MetricsCollector& collector() const { return metrics_; }

  /// Dispatches every event up to end_time and returns a metrics snapshot
  /// with energies settled at end_time.
  MetricsRecord run_until(SimTime end_time) {
    if (nodes_.empty()) throw std::invalid_argument("no nodes deployed");
    q_.run_until(end_time);
    for (auto& n : nodes_) n->energy.flush(power_, q_.now());
    return metrics_.finalize(nodes_);
  }

  /// Full run: CID, traffic, settlement, trace footer.
  MetricsRecord run() {
    MetricsRecord r = run_until(sc_.duration());
    write_footer(r);
    return r;
  }

  // --- spec surface used by tests ---------------------------------------

  double distance(NodeId a, NodeId b) const { return topo_.distance(a, b); }

  /// Deterministic received power between two nodes (no shadowing draw).
  double mean_rssi(NodeId from, NodeId to) const {
    return mean_rssi_[from * nodes_.size() + to];
  }

  // Protocol entry points (exposed for targeted tests; the event loop is the
  // normal caller).
  void opser_dispatch_send(Node& n, Packet pkt, bool origination, int min_be, int max_be,
                           bool force_opportunistic);
  void opser_on_data(Node& n, const Packet& pkt, const RxReport& rx);
  void oppbcast_on_data(Node& n, const Packet& pkt, const RxReport& rx);
  void greedy_dispatch(Node& n, Packet pkt);
  void greedy_on_data(Node& n, const Packet& pkt, const RxReport& rx);

 private:
  // -- setup ---------------------------------------------------------------

  void setup() {
    sc_.validate();
    topo_ = build_topology(sc_);
    std::size_t n = topo_.n_nodes();
    if (n == 0) throw std::invalid_argument("no nodes deployed");

    air_data_ = airtime(sc_.data_bytes, sc_.mac.data_rate_bps);
    air_cid_ = airtime(sc_.cid_bytes, sc_.mac.data_rate_bps);
    air_ack_ = airtime(sc_.ack_bytes, sc_.mac.data_rate_bps);
    power_ = sc_.power;
    cull_floor_mw_ =
        dbm_to_mw(std::min(sc_.radio.rx_thresh_dbm, sc_.radio.cs_thresh_dbm) - 30.0);
    capture_factor_ = dbm_to_mw(kCaptureMarginDb);

    mean_rssi_.resize(n * n, -300.0);
    RngStream dummy(0, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        PropagationParams det = sc_.radio;
        det.sigma_db = 0.0;  // mean path only; per-packet draw added at tx time
        mean_rssi_[i * n + j] = compute_rssi(det, topo_.distance(static_cast<NodeId>(i),
                                                                 static_cast<NodeId>(j)),
                                             dummy);
      }
    }

    nodes_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto nd = std::make_unique<Node>();
      nd->id = static_cast<NodeId>(i);
      nd->energy = EnergyAccount(sc_.e_initial_j, q_.now());
      nd->rng_channel = RngStream::for_node(seed_, nd->id, RngStream::Purpose::Channel);
      nd->rng_backoff = RngStream::for_node(seed_, nd->id, RngStream::Purpose::Backoff);
      nd->rng_holding = RngStream::for_node(seed_, nd->id, RngStream::Purpose::Holding);
      nd->rng_traffic = RngStream::for_node(seed_, nd->id, RngStream::Purpose::Traffic);
      nd->seen = SeenCache(static_cast<std::size_t>(sc_.seen_cache));
      nd->is_sink = nd->id == topo_.sink;
      nodes_.push_back(std::move(nd));
    }
    for (auto& nd : nodes_) {
      Node* np = nd.get();
      CsmaMac::Hooks hooks;
      hooks.channel_busy = [this, np] { return channel_busy(*np); };
      hooks.can_transmit = [np] {
        return np->alive() && np->radio_state() != RadioState::Sleep &&
               np->radio_state() != RadioState::Tx;
      };
      hooks.start_tx = [this, np](const Packet& p) { start_transmission(*np, p); };
      np->mac.wire(&q_, &np->rng_backoff, &sc_.mac, std::move(hooks));
    }
    for (NodeId s : topo_.sources) nodes_[s]->is_source = true;

    if (trace_.enabled()) {
      trace_.line(q_.now(), topo_.sink, "run")
          .field("name", sc_.name)
          .field("protocol", protocol_name(sc_.protocol))
          .field("seed", seed_)
          .field("n_nodes", static_cast<std::uint64_t>(n));
    }

    schedule_cid();
    schedule_traffic();
  }

  void schedule_cid() {
    q_.schedule(SimTime::from_seconds(sc_.cid_start_s), EventKind::TimerExpiry,
                [this] { cid_originate(node(topo_.sink), sc_.cid_ttl); });
  }

  void schedule_traffic() {
    if (sc_.rate_pps <= 0 || topo_.sources.empty()) return;
    SimTime start = SimTime::from_seconds(sc_.traffic_start_s);
    SimTime stop = sc_.traffic_stop_s > 0 ? SimTime::from_seconds(sc_.traffic_stop_s)
                                          : sc_.duration();
    double period_us = 1e6 / sc_.rate_pps;
    for (NodeId s : topo_.sources) {
      for (std::int64_t k = 0;; ++k) {
        SimTime t = start + SimTime::from_us(static_cast<std::int64_t>(std::llround(k * period_us)));
        if (t >= stop) break;
        q_.schedule(t, EventKind::AppPacketGenerate, [this, s] { app_generate(node(s)); });
      }
    }
  }

  // -- radio / physical layer ----------------------------------------------

  bool channel_busy(const Node& n) const {
    double sum = 0.0;
    for (const auto& f : n.active_frames) sum += f.rssi_mw;
    return sum >= dbm_to_mw(sc_.radio.cs_thresh_dbm);
  }

  void set_state(Node& n, RadioState s) {
    bool was_alive = n.alive();
    RadioState old = n.radio_state();
    n.energy.transition(power_, s, q_.now());
    if (s == RadioState::Tx || s == RadioState::Sleep) {
      for (auto& f : n.active_frames) f.rx_capable = false;
    }
    if (was_alive && !n.alive()) {
      trace_.line(q_.now(), n.id, "died");
    }
    (void)old;
  }

  SimTime frame_airtime(const Packet& p) const {
    switch (p.kind) {
      case PacketKind::Cid: return air_cid_;
      case PacketKind::Data: return air_data_;
      case PacketKind::Ack: return air_ack_;
    }
    return air_data_;
  }

  /// Puts a frame on the air: charges the transmitter, draws per-receiver
  /// fading, and schedules frame start/end at every non-culled receiver.
  /// Draws happen for every receiver in node-id order from the receiver's
  /// own channel stream, so stream alignment is independent of culling.
  void start_transmission(Node& n, const Packet& pkt) {
    set_state(n, RadioState::Tx);
    SimTime air = frame_airtime(pkt);
    bool dup = false;
    if (pkt.kind == PacketKind::Data) {
      dup = metrics_.note_data_tx(n.id, pkt.cl, pkt.flow());
    }
    if (trace_.enabled()) {
      auto l = trace_.line(q_.now(), n.id, "txs");
      l.field("k", packet_kind_name(pkt.kind));
      if (pkt.kind == PacketKind::Cid) {
        l.field("seq", pkt.cid_seq_number).field("cl", pkt.cl).field("ttl", pkt.cid_ttl);
      } else {
        l.field("src", pkt.source_id).field("pid", pkt.packet_id).field("cl", pkt.cl);
        l.field("dst", pkt.mac_dst == kBroadcastId ? std::string("bcast")
                                                   : std::to_string(pkt.mac_dst));
        if (dup) l.field("dup", 1);
      }
    }

    SimTime t_start = q_.now() + sc_.propagation_delay();
    SimTime t_end = t_start + air;
    std::uint64_t fid = ++frame_counter_;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      Node& rx = *nodes_[j];
      if (rx.id == n.id) continue;
      double rssi = mean_rssi_[n.id * nodes_.size() + j];
      if (sc_.radio.model == PropagationModel::LogNormalShadowing && sc_.radio.sigma_db > 0) {
        rssi += rx.rng_channel.normal(0.0, sc_.radio.sigma_db);
      }
      bool error_drop = false;
      if (sc_.radio.model == PropagationModel::TwoRayGroundWithError && sc_.radio.error_rate > 0) {
        error_drop = rx.rng_channel.uniform() < sc_.radio.error_rate;
      }
      double mw = dbm_to_mw(rssi);
      if (mw < cull_floor_mw_) continue;
      if (!rx.alive()) continue;
      ActiveFrame f;
      f.frame_id = fid;
      f.pkt = pkt;
      f.rssi_dbm = rssi;
      f.rssi_mw = mw;
      f.start = t_start;
      f.end = t_end;
      f.error_drop = error_drop;
      NodeId rx_id = rx.id;
      q_.schedule(t_start, EventKind::FrameStartRx, [this, rx_id, f] {
        frame_start(node(rx_id), f);
      });
    }
    NodeId tx_id = n.id;
    q_.schedule(q_.now() + air, EventKind::TimerExpiry, [this, tx_id] { on_tx_end(node(tx_id)); });
  }

  void frame_start(Node& rx, ActiveFrame f) {
    if (!rx.alive()) return;
    RadioState st = rx.radio_state();
    f.rx_capable = st == RadioState::Idle || st == RadioState::Rx;
    for (auto& g : rx.active_frames) {
      g.interference_mw += f.rssi_mw;
      f.interference_mw += g.rssi_mw;
    }
    rx.active_frames.push_back(f);
    if (f.rx_capable && st == RadioState::Idle && f.rssi_dbm >= sc_.radio.rx_thresh_dbm) {
      set_state(rx, RadioState::Rx);
    }
    NodeId rx_id = rx.id;
    std::uint64_t fid = f.frame_id;
    q_.schedule(f.end, EventKind::FrameEndRx, [this, rx_id, fid] { frame_end(node(rx_id), fid); });
  }

  void frame_end(Node& rx, std::uint64_t frame_id) {
    ActiveFrame f;
    bool found = false;
    for (std::size_t i = 0; i < rx.active_frames.size(); ++i) {
      if (rx.active_frames[i].frame_id == frame_id) {
        f = rx.active_frames[i];
        rx.active_frames.erase(rx.active_frames.begin() + i);
        found = true;
        break;
      }
    }
    if (!found || !rx.alive()) return;

    // Leave Rx once no receivable frame remains on the air.
    if (rx.radio_state() == RadioState::Rx) {
      bool still = false;
      for (const auto& g : rx.active_frames) {
        if (g.rx_capable && g.rssi_dbm >= sc_.radio.rx_thresh_dbm) still = true;
      }
      if (!still) set_state(rx, RadioState::Idle);
    }

    bool above_sens = f.rssi_dbm >= sc_.radio.rx_thresh_dbm;
    bool captured = f.interference_mw <= 0.0 ||
                    f.rssi_mw >= capture_factor_ * f.interference_mw;
    bool ok = f.rx_capable && above_sens && captured && !f.error_drop;
    if (!above_sens) return;  // below sensitivity: energy only, no frame event

    RxReport rep;
    rep.rssi_dbm = f.rssi_dbm;
    rep.lqi = rssi_to_lqi(f.rssi_dbm, sc_.radio.ed_min_dbm, sc_.radio.ed_max_dbm);
    rep.collided = !captured;
    rep.received_ok = ok;

    if (trace_.enabled()) {
      auto l = trace_.line(q_.now(), rx.id, ok ? "rxo" : "rxf");
      l.field("from", f.pkt.mac_src).field("k", packet_kind_name(f.pkt.kind));
      if (f.pkt.kind == PacketKind::Cid) {
        l.field("seq", f.pkt.cid_seq_number);
      } else {
        l.field("src", f.pkt.source_id).field("pid", f.pkt.packet_id);
      }
      if (!ok) {
        l.field("why", !f.rx_capable ? "state" : (!captured ? "coll" : "err"));
      } else {
        l.field("lqi", static_cast<int>(rep.lqi));
      }
    }
    if (!ok) return;

    deliver_frame(rx, f.pkt, rep);
  }

  void on_tx_end(Node& n) {
    if (n.alive() && n.radio_state() == RadioState::Tx) set_state(n, RadioState::Idle);
    n.mac.on_tx_complete();
  }

  /// Sends a MAC-level or explicit ACK after the rx-to-tx turnaround,
  /// bypassing CSMA.
  void send_ack_bypass(Node& n, NodeId to, NodeId source, std::uint32_t packet_id) {
    Packet ack = Packet::make_ack(n.id, to, source, packet_id, sc_.ack_bytes);
    NodeId nid = n.id;
    q_.schedule_in(sc_.mac.turnaround(), EventKind::TimerExpiry, [this, nid, ack] {
      Node& nn = node(nid);
      if (!nn.alive()) return;
      RadioState st = nn.radio_state();
      if (st == RadioState::Tx || st == RadioState::Sleep) return;  // busy; ack lost
      start_transmission(nn, ack);
    });
  }

  // -- frame delivery to the protocol layer ---------------------------------

  void deliver_frame(Node& n, const Packet& pkt, const RxReport& rx) {
    // Reverse-link LQI is averaged per packet for known forwarders.
    if (auto* e = n.nt.find(pkt.mac_src)) e->add_lqi_sample(rx.lqi);

    switch (pkt.kind) {
      case PacketKind::Cid:
        on_cid(n, pkt, rx);
        break;
      case PacketKind::Ack:
        if (pkt.mac_dst == n.id) {
          n.mac.on_ack(pkt);
          on_explicit_ack(n, pkt, rx);
        }
        break;
      case PacketKind::Data:
        if (pkt.mac_dst == n.id) {
          // Link-level acknowledgment precedes any routing decision.
          send_ack_bypass(n, pkt.mac_src, pkt.source_id, pkt.packet_id);
        }
        on_data(n, pkt, rx);
        break;
    }
  }

  void drop(Node& n, const Packet& pkt, DropReason r) {
    metrics_.on_drop(r);
    if (trace_.enabled()) {
      trace_.line(q_.now(), n.id, "drop")
          .field("reason", drop_reason_name(r))
          .field("src", pkt.source_id)
          .field("pid", pkt.packet_id);
    }
  }

  void sink_deliver(Node& n, const Packet& pkt) {
    bool first = metrics_.on_delivery(pkt.flow(), q_.now());
    if (trace_.enabled()) {
      trace_.line(q_.now(), n.id, "del")
          .field("src", pkt.source_id)
          .field("pid", pkt.packet_id)
          .field("gen", metrics_.gen_time(pkt.flow()).us)
          .field("dup", first ? 0 : 1);
    }
  }

  // -- corona interest dissemination (shared by every protocol) -------------

 public:
  void cid_originate(Node& n, int ttl) {
    if (!n.is_sink) throw std::invalid_argument("cid_originate: only the sink disseminates interest");
    n.corona_level = 1;
    std::uint32_t seq = ++cid_seq_counter_;
    n.cid_seqs_seen.push_back(seq);
    trace_.line(q_.now(), n.id, "cid").field("level", 1).field("seq", seq);
    Packet pkt = Packet::make_cid(n.id, seq, 1, n.id, ttl, sc_.cid_bytes);
    NodeId nid = n.id;
    CsmaMac::OutFrame f;
    f.pkt = pkt;
    f.min_be = sc_.mac.mac_min_be;
    f.max_be = sc_.mac.mac_max_be;
    f.done = [this, nid](const TxAttemptResult& r) {
      if (r.outcome == TxOutcome::Sent) cid_post_tx_sleep(node(nid));
      else if (r.outcome == TxOutcome::ChannelAccessFailure) metrics_.on_caf();
    };
    n.mac.enqueue(std::move(f));
  }

 private:
  void on_cid(Node& n, const Packet& pkt, const RxReport& rx) {
    if (n.cid_seq_known(pkt.cid_seq_number)) return;  // duplicate: discard
    n.cid_seqs_seen.push_back(pkt.cid_seq_number);
    if (n.is_sink) return;

    n.corona_level = pkt.cl + 1;
    n.route_status = RouteStatus::Active;
    trace_.line(q_.now(), n.id, "cid")
        .field("level", n.corona_level)
        .field("seq", pkt.cid_seq_number)
        .field("from", pkt.prev_hop_id);

    if (auto* e = n.nt.find(pkt.prev_hop_id)) {
      e->corona_level = pkt.cl;
      e->seq_num = pkt.cid_seq_number;
      e->destination_id = pkt.cid_source_id;
    } else {
      NeighborEntry fresh;
      fresh.forwarder_id = pkt.prev_hop_id;
      fresh.trust_value = kTrustInitial;
      fresh.corona_level = pkt.cl;
      fresh.destination_id = pkt.cid_source_id;
      fresh.seq_num = pkt.cid_seq_number;
      fresh.next_hop_id = pkt.next_hop_id;
      fresh.add_lqi_sample(rx.lqi);
      n.nt.add(fresh);
    }

    if (pkt.cid_ttl <= 1) return;  // learned the level; interest stops here

    // Level-based epoch scheduling: each hop defers one epoch plus jitter, so
    // level k's contention sits about (k-1) epochs after the flood start.
    SimTime jitter = SimTime::from_us(static_cast<std::int64_t>(
        n.rng_holding.uniform_int(static_cast<std::uint64_t>(std::max<std::int64_t>(1, sc_.epoch_jitter().us)))));
    SimTime delay = sc_.epoch() + jitter;
    Packet rebroadcast = Packet::make_cid(pkt.cid_source_id, pkt.cid_seq_number,
                                          n.corona_level, n.id, pkt.cid_ttl - 1,
                                          sc_.cid_bytes);
    NodeId nid = n.id;
    q_.schedule_in(delay, EventKind::TimerExpiry, [this, nid, rebroadcast] {
      Node& nn = node(nid);
      if (!nn.alive()) return;
      CsmaMac::OutFrame f;
      f.pkt = rebroadcast;
      f.min_be = sc_.mac.mac_min_be;
      f.max_be = sc_.mac.mac_max_be;
      f.done = [this, nid](const TxAttemptResult& r) {
        if (r.outcome == TxOutcome::Sent) cid_post_tx_sleep(node(nid));
        else if (r.outcome == TxOutcome::ChannelAccessFailure) metrics_.on_caf();
      };
      nn.mac.enqueue(std::move(f));
    });
  }

  void cid_post_tx_sleep(Node& n) {
    if (!n.alive()) return;
    // T_sleep >= T_fr + 2*T_p + T_proc keeps the radio off while same-level
    // peers finish their redundant copies.
    SimTime t_sleep = air_cid_ + sc_.propagation_delay() * 2 +
                      SimTime::from_seconds(sc_.t_proc_ms * 1e-3);
    set_state(n, RadioState::Sleep);
    NodeId nid = n.id;
    n.wake_timer = q_.schedule_in(t_sleep, EventKind::TimerExpiry, [this, nid] {
      Node& nn = node(nid);
      if (!nn.alive()) return;
      set_state(nn, RadioState::Idle);
      nn.mac.maybe_start();
    });
  }

  // -- application traffic ---------------------------------------------------

 public:
  void app_generate(Node& n) {
    ++n.packet_counter;
    Packet pkt = Packet::make_data(n.id, n.packet_counter, topo_.sink, n.corona_level,
                                   sc_.data_bytes);
    metrics_.on_generated(pkt.flow(), q_.now());
    trace_.line(q_.now(), n.id, "gen").field("src", n.id).field("pid", pkt.packet_id);
    if (!n.alive()) {
      drop(n, pkt, DropReason::Dead);
      return;
    }
    if (n.corona_level == 0) {
      drop(n, pkt, DropReason::NotInitialized);
      return;
    }
    n.seen.insert(pkt.flow());  // a node never relays its own packet
    switch (sc_.protocol) {
      case ProtocolKind::Opser:
        opser_dispatch_send(n, pkt, true, sc_.mac.mac_min_be, sc_.mac.mac_max_be, false);
        break;
      case ProtocolKind::OppBcast:
        oppbcast_send(n, pkt);
        break;
      case ProtocolKind::GreedyUnicast:
        greedy_dispatch(n, pkt);
        break;
    }
  }

 private:
  void on_data(Node& n, const Packet& pkt, const RxReport& rx) {
    switch (sc_.protocol) {
      case ProtocolKind::Opser:
        opser_on_data(n, pkt, rx);
        break;
      case ProtocolKind::OppBcast:
        oppbcast_on_data(n, pkt, rx);
        break;
      case ProtocolKind::GreedyUnicast:
        greedy_on_data(n, pkt, rx);
        break;
    }
  }

  void on_explicit_ack(Node& n, const Packet& ack, const RxReport& rx) {
    if (sc_.protocol == ProtocolKind::Opser) opser_on_ack(n, ack, rx);
  }

  // -- trailer ---------------------------------------------------------------

  void write_footer(const MetricsRecord& r) {
    if (!trace_.enabled()) return;
    for (const auto& n : nodes_) {
      trace_.line(q_.now(), n->id, "en")
          .field("e0", n->energy.e_initial_j())
          .field("tx", n->energy.per_state_j(RadioState::Tx))
          .field("rx", n->energy.per_state_j(RadioState::Rx))
          .field("idle", n->energy.per_state_j(RadioState::Idle))
          .field("sleep", n->energy.per_state_j(RadioState::Sleep))
          .field("rem", n->energy.e_rem_j())
          .field("cl", n->corona_level)
          .field("dead", n->alive() ? 0 : 1);
    }
    auto l = trace_.line(q_.now(), topo_.sink, "m");
    l.field("sent", r.sent_by_sources)
        .field("received", r.received_at_sink)
        .field("dup_sink", r.duplicates_at_sink)
        .field("dup_tx", r.duplicate_tx)
        .field("caf", r.caf_count)
        .field("tec", r.tec_j)
        .field("n_nodes", static_cast<std::uint64_t>(r.n_nodes));
    for (const auto& [reason, count] : r.drops_by_reason) {
      l.field(("drop_" + reason).c_str(), count);
    }
  }

  // -- OPSER internals (definitions in opser_logic.hpp) ----------------------

  void opser_enqueue_broadcast(Node& n, FlowKey flow);
  void opser_broadcast_done(Node& n, FlowKey flow, const TxAttemptResult& r);
  void opser_passive_timeout(Node& n, FlowKey flow);
  void opser_passive_success(Node& n, FlowKey flow, NodeId forwarder, int forwarder_cl,
                             double lqi);
  void opser_unicast_done(Node& n, FlowKey flow, const TxAttemptResult& r);
  void opser_on_ack(Node& n, const Packet& ack, const RxReport& rx);
  void opser_recv_broadcast(Node& n, const Packet& pkt, const RxReport& rx);
  void opser_recv_unicast(Node& n, const Packet& pkt, const RxReport& rx);
  void opser_dhd_fire(Node& n, FlowKey flow);
  void apply_trust(Node& n, NodeId neighbor, TrustEvent ev);

  // -- baseline internals (definitions in baselines.hpp) ---------------------

  void oppbcast_send(Node& n, Packet pkt);
  void oppbcast_fire(Node& n, FlowKey flow);

  Scenario sc_;
  std::uint64_t seed_ = 1;
  TraceWriter trace_;
  EventQueue q_;
  Topology topo_;
  std::vector<std::unique_ptr<Node>> nodes_;
  MetricsCollector metrics_;
  PowerProfile power_;
  std::vector<double> mean_rssi_;
  double cull_floor_mw_ = 0.0;
  double capture_factor_ = 10.0;
  SimTime air_data_{}, air_cid_{}, air_ack_{};
  std::uint64_t frame_counter_ = 0;
  std::uint32_t cid_seq_counter_ = 0;
};

}  // namespace opser

#include "opser/baselines.hpp"    // NOLINT
#include "opser/opser_logic.hpp"  // NOLINT
