#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "opser/metrics.hpp"
#include "opser/scenario.hpp"
#include "opser/simulation.hpp"

namespace opser {

// ---------------------------------------------------------------------------
// Results CSV
// ---------------------------------------------------------------------------

inline std::string csv_header() {
  std::string h =
      "scenario,seed,protocol,n_nodes,rate_pps,sent,received,pdr,avg_delay_s,"
      "tec_j,avg_energy_j,nec_j,dup_sink,dup_tx,caf";
  for (const auto& r : drop_reason_names()) h += ",drop_" + r;
  return h;
}

inline std::string csv_opt(const std::optional<double>& v) {
  return v.has_value() ? fmt_double(*v) : std::string();
}

inline std::string csv_row(const Scenario& sc, std::uint64_t seed, const MetricsRecord& m) {
  std::ostringstream os;
  auto energy = energy_metrics(m);
  os << sc.name << ',' << seed << ',' << protocol_name(sc.protocol) << ','
     << m.n_nodes << ',' << fmt_double(sc.rate_pps) << ',' << m.sent_by_sources << ','
     << m.received_at_sink << ',' << csv_opt(pdr(m)) << ',' << csv_opt(avg_e2e_delay(m))
     << ',' << fmt_double(m.tec_j) << ',' << fmt_double(energy.avg_per_node_j) << ','
     << csv_opt(energy.nec_j) << ',' << m.duplicates_at_sink << ',' << m.duplicate_tx
     << ',' << m.caf_count;
  for (const auto& r : drop_reason_names()) {
    auto it = m.drops_by_reason.find(r);
    os << ',' << (it != m.drops_by_reason.end() ? it->second : 0);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Sweep specification
// ---------------------------------------------------------------------------

/// Parameter sweep over scenario keys: the cartesian product of the listed
/// value sets, run for every seed.
struct SweepSpec {
  std::string scenario_path;
  std::vector<std::uint64_t> seeds;
  std::string out = "results";
  std::vector<std::pair<std::string, std::vector<std::string>>> values;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  auto dots = s.find("..");
  if (dots != std::string::npos) {
    std::uint64_t lo = std::stoull(trim(s.substr(0, dots)));
    std::uint64_t hi = std::stoull(trim(s.substr(dots + 2)));
    for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
    return seeds;
  }
  for (const auto& tok : split_csv(s)) seeds.push_back(std::stoull(tok));
  return seeds;
}

}  // namespace detail

inline SweepSpec parse_sweep(std::istream& in) {
  SweepSpec spec;
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
      throw std::invalid_argument("sweep line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (section == "sweep") {
      if (key == "scenario") spec.scenario_path = value;
      else if (key == "seeds") spec.seeds = detail::parse_seed_list(value);
      else if (key == "out") spec.out = value;
      else throw std::invalid_argument("sweep: unknown key " + key);
    } else if (section == "values") {
      spec.values.push_back({key, detail::split_csv(value)});
    } else {
      throw std::invalid_argument("sweep: unknown section " + section);
    }
  }
  return spec;
}

inline SweepSpec load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep file: " + path);
  return parse_sweep(in);
}

struct RunPoint {
  Scenario scenario;
  std::uint64_t seed = 1;
  std::string point;  // "key=value key=value" label for aggregation
};

/// Expands a sweep against a base scenario. Every key is validated before
/// any run executes; an empty seed list is an error.
inline std::vector<RunPoint> expand_sweep(const SweepSpec& spec, const Scenario& base) {
  if (spec.seeds.empty()) throw std::invalid_argument("sweep: empty seed list");
  for (const auto& [key, vals] : spec.values) {
    if (vals.empty()) throw std::invalid_argument("sweep: no values for key " + key);
    Scenario probe = base;
    for (const auto& v : vals) scenario_set(probe, key, v);  // throws on bad key/value
  }
  std::vector<RunPoint> points;
  std::vector<std::size_t> idx(spec.values.size(), 0);
  while (true) {
    Scenario sc = base;
    std::string label;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
      const auto& [key, vals] = spec.values[i];
      scenario_set(sc, key, vals[idx[i]]);
      if (!label.empty()) label += ' ';
      label += key + "=" + vals[idx[i]];
    }
    for (std::uint64_t seed : spec.seeds) {
      points.push_back({sc, seed, label});
    }
    // Advance the cartesian counter.
    std::size_t i = 0;
    for (; i < idx.size(); ++i) {
      if (++idx[i] < spec.values[i].second.size()) break;
      idx[i] = 0;
    }
    if (i == idx.size()) break;
  }
  return points;
}

struct SweepRowResult {
  RunPoint point;
  MetricsRecord metrics;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Runs every sweep point sequentially and writes the per-run CSV plus a
/// per-point aggregate file (mean/std/median across seeds).
inline std::vector<SweepRowResult> run_experiment(
    const SweepSpec& spec, const Scenario& base, const std::string& out_dir,
    const std::function<void(const RunPoint&, const MetricsRecord&)>& on_run = {}) {
  auto points = expand_sweep(spec, base);
  std::vector<SweepRowResult> results;
  results.reserve(points.size());

  std::ofstream csv(out_dir + "/" + spec.out + ".csv");
  if (!csv) throw std::runtime_error("cannot write results CSV");
  csv << csv_header() << '\n';

  for (const auto& pt : points) {
    Simulation sim(pt.scenario, pt.seed);
    MetricsRecord m = sim.run();
    csv << csv_row(pt.scenario, pt.seed, m) << '\n';
    if (on_run) on_run(pt, m);
    results.push_back({pt, m});
  }
  csv.close();

  // Aggregate per sweep point.
  std::ofstream agg(out_dir + "/" + spec.out + "_agg.csv");
  agg << "point,n_runs,pdr_mean,pdr_std,pdr_median,delay_mean,delay_std,delay_median,"
         "nec_mean,nec_std,nec_median,dup_tx_mean,dup_tx_median,tec_mean\n";
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRowResult*>> groups;
  for (const auto& r : results) {
    std::string key = r.point.point.empty() ? "(base)" : r.point.point;
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  auto stats = [&](const std::vector<double>& v) {
    double mean = 0, sd = 0;
    for (double x : v) mean += x;
    if (!v.empty()) mean /= v.size();
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(sd / (v.size() - 1)) : 0.0;
    return std::pair<double, double>(mean, sd);
  };
  for (const auto& key : order) {
    std::vector<double> pdrs, delays, necs, duptx, tecs;
    for (const auto* r : groups[key]) {
      if (auto p = pdr(r->metrics)) pdrs.push_back(*p);
      if (auto d = avg_e2e_delay(r->metrics)) delays.push_back(*d);
      if (auto nec = energy_metrics(r->metrics).nec_j) necs.push_back(*nec);
      duptx.push_back(static_cast<double>(r->metrics.duplicate_tx));
      tecs.push_back(r->metrics.tec_j);
    }
    auto [pm, ps] = stats(pdrs);
    auto [dm, ds] = stats(delays);
    auto [nm, ns] = stats(necs);
    auto [xm, xs] = stats(duptx);
    auto [tm, ts] = stats(tecs);
    (void)xs;
    (void)ts;
    agg << '"' << key << "\"," << groups[key].size() << ',' << fmt_double(pm) << ','
        << fmt_double(ps) << ',' << fmt_double(median_of(pdrs)) << ',' << fmt_double(dm)
        << ',' << fmt_double(ds) << ',' << fmt_double(median_of(delays)) << ','
        << fmt_double(nm) << ',' << fmt_double(ns) << ',' << fmt_double(median_of(necs))
        << ',' << fmt_double(xm) << ',' << fmt_double(median_of(duptx)) << ','
        << fmt_double(tm) << '\n';
  }
  return results;
}

}  // namespace opser
