#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>

#include "opser/event_queue.hpp"
#include "opser/packet.hpp"
#include "opser/rng.hpp"
#include "opser/types.hpp"

namespace opser {

struct CsmaConfig {
  int mac_min_be = 3;           // Table defaults; FCS frames carry their own bounds
  int mac_max_be = 5;
  int max_csma_backoffs = 7;
  int mac_retries = 3;
  std::int64_t symbol_rate = 62500;     // symbols/second
  std::int64_t data_rate_bps = 250000;

  SimTime symbols(std::int64_t n) const {
    return SimTime::from_us((n * 1000000 + symbol_rate / 2) / symbol_rate);
  }
  SimTime backoff_unit() const { return symbols(20); }   // aUnitBackoffPeriod
  SimTime cca_duration() const { return symbols(8); }
  SimTime turnaround() const { return symbols(12); }
  SimTime ack_wait() const { return symbols(54); }       // macAckWaitDuration

  void validate() const {
    if (mac_min_be < 0 || mac_max_be < mac_min_be)
      throw std::invalid_argument("mac: requires 0 <= mac_min_be <= mac_max_be");
    if (backoff_unit().us <= 0) throw std::invalid_argument("mac: bad symbol rate");
    if (data_rate_bps <= 0) throw std::invalid_argument("mac: bad data rate");
  }
};

/// Frame time on air.
inline SimTime airtime(std::uint32_t frame_bytes, std::int64_t data_rate_bps) {
  if (frame_bytes == 0) throw std::invalid_argument("airtime: empty frame");
  if (data_rate_bps <= 0) throw std::invalid_argument("airtime: zero data rate");
  std::int64_t bits = 8ll * frame_bytes;
  return SimTime::from_us((bits * 1000000 + data_rate_bps / 2) / data_rate_bps);
}

enum class TxOutcome : std::uint8_t {
  Sent,                  // broadcast transmission completed
  Acked,                 // unicast confirmed
  ChannelAccessFailure,  // backoff budget exhausted
  Failed,                // unicast retries exhausted
  Aborted,               // withdrawn before reaching the air
};

inline const char* tx_outcome_name(TxOutcome o) {
  switch (o) {
    case TxOutcome::Sent: return "sent";
    case TxOutcome::Acked: return "acked";
    case TxOutcome::ChannelAccessFailure: return "caf";
    case TxOutcome::Failed: return "failed";
    case TxOutcome::Aborted: return "aborted";
  }
  return "?";
}

struct TxAttemptResult {
  TxOutcome outcome = TxOutcome::Sent;
  SimTime total_backoff{};
  int cca_attempts = 0;
  int transmissions = 0;
};

/// Unslotted CSMA/CA with per-frame backoff-exponent bounds, CCA on backoff
/// boundaries, channel-access-failure accounting and unicast ACK/retry.
///
/// The MAC is wired to its surroundings through callbacks: a CCA probe, a
/// radio-availability gate, and a transmit hook. The simulator drives
/// on_tx_complete / on_ack; unit tests can script all three.
class CsmaMac {
 public:
  struct Hooks {
    std::function<bool()> channel_busy;           // CCA probe
    std::function<bool()> can_transmit;           // awake and alive
    std::function<void(const Packet&)> start_tx;  // put frame on the air
  };

  struct OutFrame {
    Packet pkt;
    int min_be = 3;
    int max_be = 5;
    bool want_ack = false;
    std::uint64_t abort_key = 0;  // duplicate-suppression hook; 0 = none
    std::function<void(const TxAttemptResult&)> done;
  };

  CsmaMac() = default;

  void wire(EventQueue* q, RngStream* rng, const CsmaConfig* cfg, Hooks hooks) {
    q_ = q;
    rng_ = rng;
    cfg_ = cfg;
    hooks_ = std::move(hooks);
  }

  bool idle() const { return phase_ == Phase::Idle && queue_.empty(); }
  std::size_t queue_depth() const { return queue_.size(); }

  void enqueue(OutFrame f) {
    queue_.push_back(std::move(f));
    maybe_start();
  }

  /// Withdraws a pending frame whose abort_key matches. A frame already on
  /// the air (or waiting for its ACK) is past aborting. Returns whether a
  /// frame was withdrawn.
  bool abort(std::uint64_t key) {
    if (key == 0 || queue_.empty()) return false;
    if (queue_.front().abort_key == key) {
      if (phase_ == Phase::Transmitting || phase_ == Phase::WaitAck) return false;
      q_->cancel(timer_);
      timer_ = {};
      finish(TxOutcome::Aborted);
      return true;
    }
    for (auto it = queue_.begin() + 1; it != queue_.end(); ++it) {
      if (it->abort_key == key) {
        OutFrame f = std::move(*it);
        queue_.erase(it);
        report(f, TxOutcome::Aborted);
        return true;
      }
    }
    return false;
  }

  /// Called by the radio layer when this node's transmission leaves the air.
  void on_tx_complete() {
    if (phase_ != Phase::Transmitting) return;
    if (queue_.front().want_ack) {
      phase_ = Phase::WaitAck;
      timer_ = q_->schedule_in(cfg_->ack_wait(), EventKind::TimerExpiry,
                               [this] { ack_timeout(); });
    } else {
      finish(TxOutcome::Sent);
    }
  }

  /// Called by the radio layer for every received ACK addressed to this node.
  void on_ack(const Packet& ack) {
    if (phase_ != Phase::WaitAck) return;
    const Packet& p = queue_.front().pkt;
    if (ack.source_id == p.source_id && ack.packet_id == p.packet_id &&
        ack.mac_src == p.mac_dst) {
      q_->cancel(timer_);
      timer_ = {};
      finish(TxOutcome::Acked);
    }
  }

  /// Kicks the queue; called after enqueue and when the radio wakes up.
  void maybe_start() {
    if (phase_ != Phase::Idle || queue_.empty()) return;
    if (!hooks_.can_transmit()) return;
    attempt_ = 0;
    result_ = TxAttemptResult{};
    begin_csma();
  }

 private:
  enum class Phase : std::uint8_t { Idle, Backoff, Transmitting, WaitAck };

  void begin_csma() {
    phase_ = Phase::Backoff;
    nb_ = 0;
    be_ = queue_.front().min_be;
    backoff();
  }

  void backoff() {
    std::int64_t units = static_cast<std::int64_t>(
        rng_->uniform_int(1ull << be_));  // [0, 2^BE - 1]
    SimTime wait = cfg_->backoff_unit() * units;
    result_.total_backoff += wait;
    timer_ = q_->schedule_in(wait, EventKind::CcaCheck, [this] { cca(); });
  }

  void cca() {
    timer_ = {};
    if (!hooks_.can_transmit()) {
      finish(TxOutcome::Aborted);
      return;
    }
    ++result_.cca_attempts;
    if (!hooks_.channel_busy()) {
      // Idle: transmit after the CCA and rx-to-tx turnaround times.
      timer_ = q_->schedule_in(cfg_->cca_duration() + cfg_->turnaround(),
                               EventKind::TimerExpiry, [this] { do_transmit(); });
      return;
    }
    ++nb_;
    be_ = std::min(be_ + 1, queue_.front().max_be);
    if (nb_ > cfg_->max_csma_backoffs) {
      finish(TxOutcome::ChannelAccessFailure);
      return;
    }
    backoff();
  }

  void do_transmit() {
    timer_ = {};
    if (!hooks_.can_transmit()) {
      finish(TxOutcome::Aborted);
      return;
    }
    phase_ = Phase::Transmitting;
    ++attempt_;
    ++result_.transmissions;
    hooks_.start_tx(queue_.front().pkt);
  }

  void ack_timeout() {
    timer_ = {};
    if (attempt_ > cfg_->mac_retries) {
      finish(TxOutcome::Failed);
      return;
    }
    begin_csma();
  }

  void finish(TxOutcome outcome) {
    OutFrame f = std::move(queue_.front());
    queue_.pop_front();
    phase_ = Phase::Idle;
    result_.outcome = outcome;
    TxAttemptResult r = result_;
    if (f.done) f.done(r);
    maybe_start();
  }

  void report(OutFrame& f, TxOutcome outcome) {
    TxAttemptResult r;
    r.outcome = outcome;
    if (f.done) f.done(r);
  }

  EventQueue* q_ = nullptr;
  RngStream* rng_ = nullptr;
  const CsmaConfig* cfg_ = nullptr;
  Hooks hooks_;

  std::deque<OutFrame> queue_;
  Phase phase_ = Phase::Idle;
  EventQueue::Handle timer_{};
  int nb_ = 0;
  int be_ = 0;
  int attempt_ = 0;
  TxAttemptResult result_{};
};

}  // namespace opser
