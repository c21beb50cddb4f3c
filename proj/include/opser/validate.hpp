#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "opser/metrics.hpp"
#include "opser/types.hpp"

namespace opser {

/// One parsed trace line.
struct TraceEvent {
  SimTime t{};
  NodeId node = 0;
  std::string event;
  std::map<std::string, std::string> fields;

  bool has(const std::string& k) const { return fields.count(k) > 0; }
  const std::string& str(const std::string& k) const { return fields.at(k); }
  std::int64_t i64(const std::string& k) const { return std::stoll(fields.at(k)); }
  double f64(const std::string& k) const { return std::stod(fields.at(k)); }
};

inline std::vector<TraceEvent> parse_trace(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    TraceEvent ev;
    std::int64_t t;
    ss >> t >> ev.node >> ev.event;
    ev.t = SimTime::from_us(t);
    std::string tok;
    while (ss >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      ev.fields[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    out.push_back(std::move(ev));
  }
  return out;
}

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> checks;    // "PASS <name>" / "FAIL <name>: detail"
  MetricsRecord recomputed;

  void pass(const std::string& name) { checks.push_back("PASS " + name); }
  void fail(const std::string& name, const std::string& why) {
    ok = false;
    checks.push_back("FAIL " + name + ": " + why);
  }
};

/// Offline invariant checks over a persisted trace: metric recomputation,
/// clock monotonicity, CID single-transmission, DHD priority ordering,
/// per-node energy conservation, and the PDR integer identity.
inline ValidationReport validate_trace(const std::vector<TraceEvent>& events) {
  ValidationReport rep;

  // Clock monotonicity in dispatch order.
  bool monotone = true;
  SimTime prev{};
  for (const auto& ev : events) {
    if (ev.t < prev) {
      monotone = false;
      break;
    }
    prev = ev.t;
  }
  monotone ? rep.pass("clock-monotonic") : rep.fail("clock-monotonic", "timestamps decreased");

  // Recompute the metrics record from primitive events.
  MetricsRecord& m = rep.recomputed;
  std::unordered_map<FlowKey, SimTime> gen;
  std::map<std::pair<NodeId, std::uint32_t>, int> cid_tx;  // (node, seq) -> count
  double tec = 0.0;
  bool energy_ok = true;
  std::string energy_why;
  const TraceEvent* summary = nullptr;

  for (const auto& ev : events) {
    if (ev.event == "gen") {
      ++m.sent_by_sources;
      gen[make_flow_key(static_cast<NodeId>(ev.i64("src")),
                        static_cast<std::uint32_t>(ev.i64("pid")))] = ev.t;
    } else if (ev.event == "del") {
      if (ev.i64("dup") != 0) {
        ++m.duplicates_at_sink;
      } else {
        ++m.received_at_sink;
        SimTime g = SimTime::from_us(ev.i64("gen"));
        m.per_packet_delay_s.push_back((ev.t - g).seconds());
      }
    } else if (ev.event == "txs") {
      if (ev.str("k") == "CID") {
        ++cid_tx[{ev.node, static_cast<std::uint32_t>(ev.i64("seq"))}];
      } else if (ev.str("k") == "DATA" && ev.has("dup")) {
        ++m.duplicate_tx;
      }
    } else if (ev.event == "caf") {
      ++m.caf_count;
    } else if (ev.event == "drop") {
      ++m.drops_by_reason[ev.str("reason")];
    } else if (ev.event == "en") {
      ++m.n_nodes;
      double e0 = ev.f64("e0"), rem = ev.f64("rem");
      double consumed = ev.f64("tx") + ev.f64("rx") + ev.f64("idle") + ev.f64("sleep");
      tec += e0 - rem;
      if (std::fabs((e0 - rem) - consumed) > 1e-12) {
        energy_ok = false;
        energy_why = "node " + std::to_string(ev.node) + " off by " +
                     std::to_string((e0 - rem) - consumed);
      }
    } else if (ev.event == "m") {
      summary = &ev;
    }
  }
  m.tec_j = tec;

  energy_ok ? rep.pass("energy-conservation") : rep.fail("energy-conservation", energy_why);

  // CID single-transmission per sequence number.
  bool cid_once = true;
  std::string cid_why;
  for (const auto& [key, count] : cid_tx) {
    if (count > 1) {
      cid_once = false;
      cid_why = "node " + std::to_string(key.first) + " seq " +
                std::to_string(key.second) + " transmitted " + std::to_string(count) + "x";
      break;
    }
  }
  cid_once ? rep.pass("cid-single-tx") : rep.fail("cid-single-tx", cid_why);

  // DHD ordering: candidates armed at the same instant for the same flow
  // must expire in priority order.
  {
    std::map<std::pair<FlowKey, std::int64_t>, std::vector<std::pair<int, std::int64_t>>> rounds;
    for (const auto& ev : events) {
      if (ev.event != "dhd") continue;
      FlowKey flow = make_flow_key(static_cast<NodeId>(ev.i64("src")),
                                   static_cast<std::uint32_t>(ev.i64("pid")));
      rounds[{flow, ev.t.us}].push_back({static_cast<int>(ev.i64("prio")), ev.i64("expire")});
    }
    bool ordered = true;
    std::string why;
    for (const auto& [key, cands] : rounds) {
      for (std::size_t a = 0; a < cands.size() && ordered; ++a) {
        for (std::size_t b = 0; b < cands.size(); ++b) {
          if (cands[a].first < cands[b].first && cands[a].second >= cands[b].second) {
            ordered = false;
            why = "flow " + std::to_string(key.first) + ": priority " +
                  std::to_string(cands[a].first) + " expires after priority " +
                  std::to_string(cands[b].first);
            break;
          }
        }
      }
    }
    ordered ? rep.pass("dhd-priority-order") : rep.fail("dhd-priority-order", why);
  }

  // Recomputed metrics must match the recorded summary line bit for bit.
  if (!summary) {
    rep.fail("metrics-recompute", "trace has no summary line");
  } else {
    bool same = true;
    std::string why;
    auto check_u64 = [&](const char* key, std::uint64_t v) {
      if (static_cast<std::uint64_t>(summary->i64(key)) != v) {
        same = false;
        why += std::string(key) + " mismatch ";
      }
    };
    check_u64("sent", m.sent_by_sources);
    check_u64("received", m.received_at_sink);
    check_u64("dup_sink", m.duplicates_at_sink);
    check_u64("dup_tx", m.duplicate_tx);
    check_u64("caf", m.caf_count);
    check_u64("n_nodes", m.n_nodes);
    if (summary->f64("tec") != m.tec_j) {
      same = false;
      why += "tec mismatch ";
    }
    same ? rep.pass("metrics-recompute") : rep.fail("metrics-recompute", why);
  }

  // PDR integer identity.
  auto p = pdr(m);
  if (p.has_value()) {
    if (std::llround(*p * static_cast<double>(m.sent_by_sources)) ==
        static_cast<std::int64_t>(m.received_at_sink)) {
      rep.pass("pdr-identity");
    } else {
      rep.fail("pdr-identity", "pdr*sent != received");
    }
  } else {
    rep.pass("pdr-identity");
  }

  return rep;
}

inline ValidationReport validate_trace(std::istream& in) {
  return validate_trace(parse_trace(in));
}

}  // namespace opser
