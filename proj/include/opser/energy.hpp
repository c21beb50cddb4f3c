#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "opser/types.hpp"

namespace opser {

enum class RadioState : std::uint8_t { Tx = 0, Rx = 1, Idle = 2, Sleep = 3 };

inline const char* radio_state_name(RadioState s) {
  switch (s) {
    case RadioState::Tx: return "tx";
    case RadioState::Rx: return "rx";
    case RadioState::Idle: return "idle";
    case RadioState::Sleep: return "sleep";
  }
  return "?";
}

struct PowerProfile {
  double p_tx_w = 0.02955;
  double p_rx_w = 0.0255;
  double p_idle_w = 0.0255;   // idle listening costs receive power
  double p_sleep_w = 3e-6;
  double e_min_j = 0.18;      // forwarding eligibility threshold

  double power(RadioState s) const {
    switch (s) {
      case RadioState::Tx: return p_tx_w;
      case RadioState::Rx: return p_rx_w;
      case RadioState::Idle: return p_idle_w;
      case RadioState::Sleep: return p_sleep_w;
    }
    return 0.0;
  }

  void validate() const {
    if (p_tx_w < 0 || p_rx_w < 0 || p_idle_w < 0 || p_sleep_w < 0)
      throw std::invalid_argument("power: negative draw");
    if (!(p_sleep_w < p_idle_w && p_idle_w <= p_rx_w))
      throw std::invalid_argument("power: requires p_sleep < p_idle <= p_rx");
  }
};

/// Per-node energy account. Energy is charged lazily at state transitions.
/// Remaining energy is defined as e_initial minus the per-state sums, so the
/// conservation identity holds by construction.
class EnergyAccount {
 public:
  EnergyAccount() = default;
  EnergyAccount(double e_initial_j, SimTime t0)
      : e_initial_j_(e_initial_j), state_entry_(t0) {}

  RadioState state() const { return state_; }
  SimTime state_entry_time() const { return state_entry_; }
  double e_initial_j() const { return e_initial_j_; }
  bool dead() const { return dead_; }

  double per_state_j(RadioState s) const {
    return per_state_[static_cast<std::size_t>(s)];
  }

  double consumed_j() const {
    // Fixed summation order: Tx, Rx, Idle, Sleep.
    return per_state_[0] + per_state_[1] + per_state_[2] + per_state_[3];
  }

  double e_rem_j() const {
    double rem = e_initial_j_ - consumed_j();
    return rem > 0 ? rem : 0.0;
  }

  bool is_eligible(const PowerProfile& p) const { return e_rem_j() >= p.e_min_j; }

  /// Charges the elapsed interval at the old state's power, floored at zero
  /// remaining energy, then records the new state. Reaching zero marks the
  /// node dead.
  void transition(const PowerProfile& p, RadioState new_state, SimTime now) {
    if (now < state_entry_) throw std::logic_error("energy: time went backwards");
    double de = (now - state_entry_).seconds() * p.power(state_);
    double rem = e_rem_j();
    if (de >= rem) {
      de = rem;
      dead_ = true;
    }
    per_state_[static_cast<std::size_t>(state_)] += de;
    state_ = new_state;
    state_entry_ = now;
  }

  /// Charges up to now without changing state (end-of-run settlement).
  void flush(const PowerProfile& p, SimTime now) { transition(p, state_, now); }

 private:
  double e_initial_j_ = 3.6;
  std::array<double, 4> per_state_{};
  RadioState state_ = RadioState::Idle;
  SimTime state_entry_{};
  bool dead_ = false;
};

}  // namespace opser
