#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "opser/energy.hpp"
#include "opser/mac.hpp"
#include "opser/radio.hpp"
#include "opser/rng.hpp"
#include "opser/trace.hpp"
#include "opser/types.hpp"

namespace opser {

enum class ProtocolKind : std::uint8_t { Opser, OppBcast, GreedyUnicast };

inline const char* protocol_name(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::Opser: return "opser";
    case ProtocolKind::OppBcast: return "oppbcast";
    case ProtocolKind::GreedyUnicast: return "greedy_unicast";
  }
  return "?";
}

inline ProtocolKind parse_protocol(const std::string& s) {
  if (s == "opser") return ProtocolKind::Opser;
  if (s == "oppbcast") return ProtocolKind::OppBcast;
  if (s == "greedy_unicast") return ProtocolKind::GreedyUnicast;
  throw std::invalid_argument("unknown protocol: " + s);
}

enum class TopologyKind : std::uint8_t { Grid, Random };

/// Full run description. Every field is reachable through the string
/// registry below, which backs the scenario file format and sweep overrides.
struct Scenario {
  // [run]
  std::string name = "default";
  ProtocolKind protocol = ProtocolKind::Opser;
  double duration_s = 100.0;
  std::uint64_t seed = 1;

  // [topology]
  TopologyKind topology = TopologyKind::Grid;
  int rows = 11;
  int cols = 11;
  double spacing_m = 10.0;
  int random_n = 50;
  double width_m = 100.0;
  double height_m = 100.0;
  std::string sink = "corner";  // corner | center | <node id>
  int source_count = 4;         // used when source_ids is empty (extreme-end rule)
  std::vector<NodeId> source_ids;

  // [traffic]
  double rate_pps = 5.0;
  double traffic_start_s = 2.0;
  double traffic_stop_s = 0.0;  // 0 = run until duration

  // [radio]
  PropagationParams radio;

  // [mac]
  CsmaConfig mac;

  // [energy]
  double e_initial_j = 3.6;
  PowerProfile power;

  // [protocol]
  double hold_t_ms = 5.0;       // DHD holding time T
  int lqi_tl = 85;
  int lqi_th = 170;
  int cid_ttl = 32;
  double cid_start_s = 0.1;
  double epoch_ms = 50.0;       // CID level-based epoch
  double epoch_jitter_ms = 10.0;
  double contention_window_ms = 5.0;  // OppBcast holding window
  int seen_cache = 256;
  std::uint32_t data_bytes = 70;
  std::uint32_t cid_bytes = 24;
  std::uint32_t ack_bytes = 11;
  double t_proc_ms = 1.0;       // frame processing time for the CID sleep
  double t_p_us = 1.0;          // propagation delay

  SimTime hold_t() const { return SimTime::from_seconds(hold_t_ms * 1e-3); }
  SimTime epoch() const { return SimTime::from_seconds(epoch_ms * 1e-3); }
  SimTime epoch_jitter() const { return SimTime::from_seconds(epoch_jitter_ms * 1e-3); }
  SimTime contention_window() const { return SimTime::from_seconds(contention_window_ms * 1e-3); }
  SimTime propagation_delay() const { return SimTime::from_us(static_cast<std::int64_t>(std::llround(t_p_us))); }
  SimTime duration() const { return SimTime::from_seconds(duration_s); }

  /// Passive-ACK wait: one full band past the worst priority plus airtime.
  SimTime dhd_max() const { return hold_t() * 7 + airtime(data_bytes, mac.data_rate_bps); }

  void validate() const {
    radio.validate();
    mac.validate();
    power.validate();
    if (duration_s <= 0) throw std::invalid_argument("scenario: duration must be > 0");
    if (topology == TopologyKind::Grid) {
      if (rows < 1 || cols < 1) throw std::invalid_argument("scenario: empty grid");
      if (spacing_m <= 0) throw std::invalid_argument("scenario: grid spacing must be > 0");
    } else {
      if (random_n < 1) throw std::invalid_argument("scenario: no nodes deployed");
      if (width_m <= 0 || height_m <= 0) throw std::invalid_argument("scenario: degenerate field");
    }
    if (hold_t_ms <= 0) throw std::invalid_argument("scenario: holding time must be > 0");
    if (lqi_tl >= lqi_th) throw std::invalid_argument("scenario: requires lqi_tl < lqi_th");
    if (cid_ttl < 1) throw std::invalid_argument("scenario: cid_ttl must be >= 1");
    if (e_initial_j <= 0) throw std::invalid_argument("scenario: initial energy must be > 0");
    if (seen_cache < 1) throw std::invalid_argument("scenario: seen cache must hold >= 1 entry");
  }
};

namespace detail {

struct FieldDef {
  std::string section;
  std::string key;
  std::function<std::string(const Scenario&)> get;
  std::function<void(Scenario&, const std::string&)> set;
};

inline double parse_real(const std::string& v) {
  std::size_t pos = 0;
  double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad number: " + v);
  return d;
}

inline std::int64_t parse_int(const std::string& v) {
  std::size_t pos = 0;
  long long i = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad integer: " + v);
  return i;
}

inline const std::vector<FieldDef>& scenario_fields() {
  auto real_field = [](const char* sec, const char* key, auto member) {
    return FieldDef{sec, key,
                    [member](const Scenario& s) { return fmt_double(s.*member); },
                    [member](Scenario& s, const std::string& v) { s.*member = parse_real(v); }};
  };
  auto int_field = [](const char* sec, const char* key, auto member) {
    return FieldDef{sec, key,
                    [member](const Scenario& s) { return std::to_string(s.*member); },
                    [member](Scenario& s, const std::string& v) {
                      s.*member = static_cast<std::remove_reference_t<decltype(s.*member)>>(parse_int(v));
                    }};
  };

  static const std::vector<FieldDef> fields = [&] {
    std::vector<FieldDef> f;
    f.push_back({"run", "name", [](const Scenario& s) { return s.name; },
                 [](Scenario& s, const std::string& v) { s.name = v; }});
    f.push_back({"run", "protocol",
                 [](const Scenario& s) { return protocol_name(s.protocol); },
                 [](Scenario& s, const std::string& v) { s.protocol = parse_protocol(v); }});
    f.push_back(real_field("run", "duration_s", &Scenario::duration_s));
    f.push_back({"run", "seed",
                 [](const Scenario& s) { return std::to_string(s.seed); },
                 [](Scenario& s, const std::string& v) {
                   s.seed = static_cast<std::uint64_t>(std::stoull(v));
                 }});

    f.push_back({"topology", "kind",
                 [](const Scenario& s) {
                   return std::string(s.topology == TopologyKind::Grid ? "grid" : "random");
                 },
                 [](Scenario& s, const std::string& v) {
                   if (v == "grid") s.topology = TopologyKind::Grid;
                   else if (v == "random") s.topology = TopologyKind::Random;
                   else throw std::invalid_argument("unknown topology: " + v);
                 }});
    f.push_back(int_field("topology", "rows", &Scenario::rows));
    f.push_back(int_field("topology", "cols", &Scenario::cols));
    f.push_back(real_field("topology", "spacing_m", &Scenario::spacing_m));
    f.push_back(int_field("topology", "n", &Scenario::random_n));
    f.push_back(real_field("topology", "width_m", &Scenario::width_m));
    f.push_back(real_field("topology", "height_m", &Scenario::height_m));
    f.push_back({"topology", "sink", [](const Scenario& s) { return s.sink; },
                 [](Scenario& s, const std::string& v) { s.sink = v; }});
    f.push_back(int_field("topology", "source_count", &Scenario::source_count));
    f.push_back({"topology", "source_ids",
                 [](const Scenario& s) {
                   std::string out;
                   for (std::size_t i = 0; i < s.source_ids.size(); ++i) {
                     if (i) out += ',';
                     out += std::to_string(s.source_ids[i]);
                   }
                   return out;
                 },
                 [](Scenario& s, const std::string& v) {
                   s.source_ids.clear();
                   std::stringstream ss(v);
                   std::string tok;
                   while (std::getline(ss, tok, ',')) {
                     if (!tok.empty()) s.source_ids.push_back(static_cast<NodeId>(parse_int(tok)));
                   }
                 }});

    f.push_back(real_field("traffic", "rate_pps", &Scenario::rate_pps));
    f.push_back(real_field("traffic", "start_s", &Scenario::traffic_start_s));
    f.push_back(real_field("traffic", "stop_s", &Scenario::traffic_stop_s));

    f.push_back({"radio", "model",
                 [](const Scenario& s) {
                   return std::string(s.radio.model == PropagationModel::LogNormalShadowing
                                          ? "log_normal"
                                          : "two_ray_error");
                 },
                 [](Scenario& s, const std::string& v) {
                   if (v == "log_normal") s.radio.model = PropagationModel::LogNormalShadowing;
                   else if (v == "two_ray_error") s.radio.model = PropagationModel::TwoRayGroundWithError;
                   else throw std::invalid_argument("unknown radio model: " + v);
                 }});
    auto radio_real = [&](const char* key, double PropagationParams::*m) {
      return FieldDef{"radio", key,
                      [m](const Scenario& s) { return fmt_double(s.radio.*m); },
                      [m](Scenario& s, const std::string& v) { s.radio.*m = parse_real(v); }};
    };
    f.push_back(radio_real("pt_dbm", &PropagationParams::pt_dbm));
    f.push_back(radio_real("beta", &PropagationParams::beta));
    f.push_back(radio_real("sigma_db", &PropagationParams::sigma_db));
    f.push_back(radio_real("d0_m", &PropagationParams::d0_m));
    f.push_back(radio_real("pl_d0_db", &PropagationParams::pl_d0_db));
    f.push_back(radio_real("error_rate", &PropagationParams::error_rate));
    f.push_back(radio_real("rx_thresh_dbm", &PropagationParams::rx_thresh_dbm));
    f.push_back(radio_real("cs_thresh_dbm", &PropagationParams::cs_thresh_dbm));
    f.push_back(radio_real("ed_min_dbm", &PropagationParams::ed_min_dbm));
    f.push_back(radio_real("ed_max_dbm", &PropagationParams::ed_max_dbm));
    f.push_back(radio_real("antenna_height_m", &PropagationParams::antenna_height_m));
    f.push_back(radio_real("freq_hz", &PropagationParams::freq_hz));

    auto mac_int = [&](const char* key, int CsmaConfig::*m) {
      return FieldDef{"mac", key,
                      [m](const Scenario& s) { return std::to_string(s.mac.*m); },
                      [m](Scenario& s, const std::string& v) { s.mac.*m = static_cast<int>(parse_int(v)); }};
    };
    f.push_back(mac_int("min_be", &CsmaConfig::mac_min_be));
    f.push_back(mac_int("max_be", &CsmaConfig::mac_max_be));
    f.push_back(mac_int("max_csma_backoffs", &CsmaConfig::max_csma_backoffs));
    f.push_back(mac_int("mac_retries", &CsmaConfig::mac_retries));
    f.push_back({"mac", "symbol_rate",
                 [](const Scenario& s) { return std::to_string(s.mac.symbol_rate); },
                 [](Scenario& s, const std::string& v) { s.mac.symbol_rate = parse_int(v); }});
    f.push_back({"mac", "data_rate_bps",
                 [](const Scenario& s) { return std::to_string(s.mac.data_rate_bps); },
                 [](Scenario& s, const std::string& v) { s.mac.data_rate_bps = parse_int(v); }});

    f.push_back(real_field("energy", "e_initial_j", &Scenario::e_initial_j));
    auto power_real = [&](const char* key, double PowerProfile::*m) {
      return FieldDef{"energy", key,
                      [m](const Scenario& s) { return fmt_double(s.power.*m); },
                      [m](Scenario& s, const std::string& v) { s.power.*m = parse_real(v); }};
    };
    f.push_back(power_real("p_tx_w", &PowerProfile::p_tx_w));
    f.push_back(power_real("p_rx_w", &PowerProfile::p_rx_w));
    f.push_back(power_real("p_idle_w", &PowerProfile::p_idle_w));
    f.push_back(power_real("p_sleep_w", &PowerProfile::p_sleep_w));
    f.push_back(power_real("e_min_j", &PowerProfile::e_min_j));

    f.push_back(real_field("protocol", "hold_t_ms", &Scenario::hold_t_ms));
    f.push_back(int_field("protocol", "lqi_tl", &Scenario::lqi_tl));
    f.push_back(int_field("protocol", "lqi_th", &Scenario::lqi_th));
    f.push_back(int_field("protocol", "cid_ttl", &Scenario::cid_ttl));
    f.push_back(real_field("protocol", "cid_start_s", &Scenario::cid_start_s));
    f.push_back(real_field("protocol", "epoch_ms", &Scenario::epoch_ms));
    f.push_back(real_field("protocol", "epoch_jitter_ms", &Scenario::epoch_jitter_ms));
    f.push_back(real_field("protocol", "contention_window_ms", &Scenario::contention_window_ms));
    f.push_back(int_field("protocol", "seen_cache", &Scenario::seen_cache));
    f.push_back(int_field("protocol", "data_bytes", &Scenario::data_bytes));
    f.push_back(int_field("protocol", "cid_bytes", &Scenario::cid_bytes));
    f.push_back(int_field("protocol", "ack_bytes", &Scenario::ack_bytes));
    f.push_back(real_field("protocol", "t_proc_ms", &Scenario::t_proc_ms));
    f.push_back(real_field("protocol", "t_p_us", &Scenario::t_p_us));
    return f;
  }();
  return fields;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Applies one "section.key = value" override; throws on unknown keys.
inline void scenario_set(Scenario& s, const std::string& path, const std::string& value) {
  auto dot = path.find('.');
  if (dot == std::string::npos) throw std::invalid_argument("scenario key needs section.key: " + path);
  std::string section = path.substr(0, dot), key = path.substr(dot + 1);
  for (const auto& fd : detail::scenario_fields()) {
    if (fd.section == section && fd.key == key) {
      fd.set(s, value);
      return;
    }
  }
  throw std::invalid_argument("unknown scenario key: " + path);
}

inline std::string scenario_get(const Scenario& s, const std::string& path) {
  auto dot = path.find('.');
  if (dot == std::string::npos) throw std::invalid_argument("scenario key needs section.key: " + path);
  std::string section = path.substr(0, dot), key = path.substr(dot + 1);
  for (const auto& fd : detail::scenario_fields()) {
    if (fd.section == section && fd.key == key) return fd.get(s);
  }
  throw std::invalid_argument("unknown scenario key: " + path);
}

/// Parses the flat key-value scenario text (sections in brackets, # or ;
/// comments). Unknown sections or keys are rejected.
inline Scenario parse_scenario(std::istream& in) {
  Scenario s;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": key outside any section");
    scenario_set(s, section + "." + key, value);
  }
  return s;
}

inline Scenario parse_scenario_string(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  return parse_scenario(in);
}

/// Canonical serialization; parse(serialize(s)) == s field for field.
inline std::string serialize_scenario(const Scenario& s) {
  std::string out;
  std::string section;
  for (const auto& fd : detail::scenario_fields()) {
    if (fd.section != section) {
      if (!out.empty()) out += '\n';
      out += '[' + fd.section + "]\n";
      section = fd.section;
    }
    out += fd.key + " = " + fd.get(s) + '\n';
  }
  return out;
}

struct Topology {
  std::vector<double> x;
  std::vector<double> y;
  NodeId sink = 0;
  std::vector<NodeId> sources;

  std::size_t n_nodes() const { return x.size(); }
  double distance(NodeId a, NodeId b) const {
    double dx = x[a] - x[b], dy = y[a] - y[b];
    return std::sqrt(dx * dx + dy * dy);
  }
};

/// Deterministic node placement plus sink/source selection. Random layouts
/// draw from a dedicated stream of the run seed; overlapping draws (within
/// 1 cm) are rejected and redrawn.
inline Topology build_topology(const Scenario& s) {
  s.validate();
  Topology t;
  if (s.topology == TopologyKind::Grid) {
    t.x.reserve(static_cast<std::size_t>(s.rows) * s.cols);
    for (int r = 0; r < s.rows; ++r) {
      for (int c = 0; c < s.cols; ++c) {
        t.x.push_back(c * s.spacing_m);
        t.y.push_back(r * s.spacing_m);
      }
    }
  } else {
    RngStream rng(s.seed, 0xf0f0f0f0ull);
    while (t.x.size() < static_cast<std::size_t>(s.random_n)) {
      double px = rng.uniform() * s.width_m;
      double py = rng.uniform() * s.height_m;
      bool clash = false;
      for (std::size_t i = 0; i < t.x.size(); ++i) {
        if (std::abs(t.x[i] - px) < 0.01 && std::abs(t.y[i] - py) < 0.01) {
          clash = true;
          break;
        }
      }
      if (!clash) {
        t.x.push_back(px);
        t.y.push_back(py);
      }
    }
  }

  std::size_t n = t.n_nodes();
  if (n == 0) throw std::invalid_argument("no nodes deployed");

  auto nearest_to = [&](double px, double py) {
    NodeId best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < n; ++i) {
      double dx = t.x[i] - px, dy = t.y[i] - py;
      double d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best = static_cast<NodeId>(i);
      }
    }
    return best;
  };

  if (s.sink == "corner") {
    t.sink = nearest_to(0.0, 0.0);
  } else if (s.sink == "center") {
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cx += t.x[i];
      cy += t.y[i];
    }
    t.sink = nearest_to(cx / n, cy / n);
  } else {
    t.sink = static_cast<NodeId>(detail::parse_int(s.sink));
    if (t.sink >= n) throw std::invalid_argument("scenario: sink id out of range");
  }

  if (!s.source_ids.empty()) {
    for (NodeId id : s.source_ids) {
      if (id >= n) throw std::invalid_argument("scenario: source id out of range");
      if (id == t.sink) throw std::invalid_argument("scenario: sink cannot source traffic");
    }
    t.sources = s.source_ids;
  } else if (s.source_count > 0) {
    // Extreme-end rule: the source_count nodes farthest from the sink.
    std::vector<NodeId> order;
    for (std::size_t i = 0; i < n; ++i)
      if (static_cast<NodeId>(i) != t.sink) order.push_back(static_cast<NodeId>(i));
    std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
      double da = t.distance(a, t.sink), db = t.distance(b, t.sink);
      if (da != db) return da > db;
      return a < b;
    });
    std::size_t k = std::min<std::size_t>(order.size(), static_cast<std::size_t>(s.source_count));
    t.sources.assign(order.begin(), order.begin() + k);
  }
  return t;
}

}  // namespace opser
