#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace opser {

using NodeId = std::uint32_t;

/// MAC broadcast address.
inline constexpr NodeId kBroadcastId = std::numeric_limits<NodeId>::max();

/// Virtual time, held in integer microseconds so every protocol constant
/// (backoff units, airtimes, holding delays) is exactly representable.
struct SimTime {
  std::int64_t us = 0;

  static constexpr SimTime from_us(std::int64_t v) { return SimTime{v}; }
  static constexpr SimTime from_ms(std::int64_t v) { return SimTime{v * 1000}; }
  static SimTime from_seconds(double s) {
    return SimTime{static_cast<std::int64_t>(std::llround(s * 1e6))};
  }

  double seconds() const { return static_cast<double>(us) * 1e-6; }

  constexpr auto operator<=>(const SimTime&) const = default;
  constexpr SimTime operator+(SimTime o) const { return SimTime{us + o.us}; }
  constexpr SimTime operator-(SimTime o) const { return SimTime{us - o.us}; }
  constexpr SimTime& operator+=(SimTime o) {
    us += o.us;
    return *this;
  }
  constexpr SimTime operator*(std::int64_t k) const { return SimTime{us * k}; }
};

inline constexpr SimTime kTimeZero{0};

/// Key identifying a data flow end to end: (source_id, packet_id).
using FlowKey = std::uint64_t;

inline constexpr FlowKey make_flow_key(NodeId source, std::uint32_t packet_id) {
  return (static_cast<FlowKey>(source) << 32) | packet_id;
}

inline constexpr NodeId flow_source(FlowKey k) {
  return static_cast<NodeId>(k >> 32);
}

inline constexpr std::uint32_t flow_packet(FlowKey k) {
  return static_cast<std::uint32_t>(k & 0xffffffffu);
}

}  // namespace opser
