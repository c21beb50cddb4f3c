#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "opser/types.hpp"

namespace opser {

enum class EventKind : std::uint8_t {
  FrameStartRx,
  FrameEndRx,
  TimerExpiry,
  CcaCheck,
  AppPacketGenerate,
  SimEnd,
};

/// Deterministic discrete-event core: a virtual clock plus a priority queue
/// ordered by (fire_time, insertion sequence). Equal timestamps dispatch in
/// FIFO order, which makes simultaneous-reception races reproducible.
class EventQueue {
 public:
  using Action = std::function<void()>;

  struct Handle {
    std::uint64_t id = 0;
    bool valid() const { return id != 0; }
  };

  SimTime now() const { return now_; }
  std::size_t pending() const { return live_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  Handle schedule(SimTime at, EventKind kind, Action fn) {
    if (at < now_) {
      throw std::logic_error("EventQueue: scheduling in the past");
    }
    std::uint64_t id = next_seq_++;
    heap_.push(Entry{at, id});
    live_.emplace(id, Pending{kind, std::move(fn)});
    return Handle{id};
  }

  Handle schedule_in(SimTime delay, EventKind kind, Action fn) {
    return schedule(now_ + delay, kind, std::move(fn));
  }

  /// Cancels a pending event. A cancelled or already-fired handle is a no-op;
  /// returns whether anything was removed.
  bool cancel(Handle h) {
    return h.valid() && live_.erase(h.id) > 0;
  }

  /// Dispatches the earliest live event. Returns false when the queue is empty.
  bool dispatch_next() {
    while (!heap_.empty()) {
      Entry e = heap_.top();
      auto it = live_.find(e.seq);
      if (it == live_.end()) {
        heap_.pop();  // cancelled
        continue;
      }
      heap_.pop();
      Action fn = std::move(it->second.fn);
      live_.erase(it);
      now_ = e.at;  // nondecreasing by heap order
      ++dispatched_;
      fn();
      return true;
    }
    return false;
  }

  /// Dispatches every event with fire_time <= end, then advances the clock
  /// to end.
  void run_until(SimTime end) {
    while (true) {
      std::uint64_t top = next_live_top();
      if (top == 0 || heap_.top().at > end) break;
      dispatch_next();
    }
    if (end > now_) now_ = end;
  }

  bool has_pending_before(SimTime t) {
    std::uint64_t top = next_live_top();
    return top != 0 && heap_.top().at <= t;
  }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
  };
  struct Cmp {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at.us != b.at.us) return a.at.us > b.at.us;
      return a.seq > b.seq;
    }
  };
  struct Pending {
    EventKind kind;
    Action fn;
  };

  // Drops cancelled entries off the top; returns the live top seq (0 if none).
  std::uint64_t next_live_top() {
    while (!heap_.empty()) {
      if (live_.count(heap_.top().seq)) return heap_.top().seq;
      heap_.pop();
    }
    return 0;
  }

  std::priority_queue<Entry, std::vector<Entry>, Cmp> heap_;
  std::unordered_map<std::uint64_t, Pending> live_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t dispatched_ = 0;
  SimTime now_{};
};

}  // namespace opser
