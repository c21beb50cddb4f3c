#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opser/types.hpp"

namespace opser {

/// Drop accounting buckets. Names double as trace/CSV tokens.
enum class DropReason : std::uint8_t {
  HigherCl,
  LowEnergy,
  Duplicate,
  NoRoute,
  Ttl,
  RetryExhausted,
  Caf,
  UnknownDestination,
  NotInitialized,
  Dead,
};

inline const char* drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::HigherCl: return "higher_cl";
    case DropReason::LowEnergy: return "low_energy";
    case DropReason::Duplicate: return "duplicate";
    case DropReason::NoRoute: return "no_route";
    case DropReason::Ttl: return "ttl";
    case DropReason::RetryExhausted: return "retry_exhausted";
    case DropReason::Caf: return "caf";
    case DropReason::UnknownDestination: return "unknown_destination";
    case DropReason::NotInitialized: return "not_initialized";
    case DropReason::Dead: return "dead";
  }
  return "?";
}

inline const std::vector<std::string>& drop_reason_names() {
  static const std::vector<std::string> names = {
      "higher_cl",      "low_energy", "duplicate",           "no_route",
      "ttl",            "retry_exhausted", "caf",            "unknown_destination",
      "not_initialized", "dead"};
  return names;
}

/// Per-run aggregation snapshot.
struct MetricsRecord {
  std::uint64_t sent_by_sources = 0;
  std::uint64_t received_at_sink = 0;   // unique (source, packet_id) pairs
  std::uint64_t duplicates_at_sink = 0;
  std::uint64_t duplicate_tx = 0;       // redundant data transmissions
  std::uint64_t caf_count = 0;
  std::vector<double> per_packet_delay_s;
  double tec_j = 0.0;
  std::uint32_t n_nodes = 0;
  std::map<std::string, std::uint64_t> drops_by_reason;
};

/// Packet delivery ratio; absent when nothing was sent. Duplicates are
/// excluded from the numerator.
inline std::optional<double> pdr(const MetricsRecord& r) {
  if (r.sent_by_sources == 0) return std::nullopt;
  return static_cast<double>(r.received_at_sink) /
         static_cast<double>(r.sent_by_sources);
}

/// Mean end-to-end delay over first-copy deliveries; absent when nothing
/// arrived.
inline std::optional<double> avg_e2e_delay(const MetricsRecord& r) {
  if (r.per_packet_delay_s.empty()) return std::nullopt;
  double sum = 0.0;
  for (double d : r.per_packet_delay_s) sum += d;
  return sum / static_cast<double>(r.per_packet_delay_s.size());
}

struct EnergySummary {
  double avg_per_node_j = 0.0;
  std::optional<double> nec_j;  // per delivered packet
};

inline EnergySummary energy_metrics(const MetricsRecord& r) {
  EnergySummary s;
  if (r.n_nodes > 0) s.avg_per_node_j = r.tec_j / r.n_nodes;
  if (r.received_at_sink > 0)
    s.nec_j = r.tec_j / static_cast<double>(r.received_at_sink);
  return s;
}

}  // namespace opser
