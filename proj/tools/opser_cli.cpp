// Command-line front end: run scenarios, execute sweeps, print the
// closed-form analysis tables and validate persisted traces.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opser/core.hpp"

namespace fs = std::filesystem;
using namespace opser;

namespace {

std::vector<double> parse_probs(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

void print_summary(const Scenario& sc, std::uint64_t seed, const MetricsRecord& m) {
  auto energy = energy_metrics(m);
  std::cout << "run " << sc.name << " protocol=" << protocol_name(sc.protocol)
            << " seed=" << seed << " nodes=" << m.n_nodes << "\n";
  std::cout << "  sent=" << m.sent_by_sources << " received=" << m.received_at_sink
            << " pdr=" << (pdr(m) ? fmt_double(*pdr(m)) : "n/a") << "\n";
  std::cout << "  avg_delay_s="
            << (avg_e2e_delay(m) ? fmt_double(*avg_e2e_delay(m)) : "n/a")
            << " tec_j=" << fmt_double(m.tec_j)
            << " nec_j=" << (energy.nec_j ? fmt_double(*energy.nec_j) : "n/a") << "\n";
  std::cout << "  dup_sink=" << m.duplicates_at_sink << " dup_tx=" << m.duplicate_tx
            << " caf=" << m.caf_count << "\n";
  for (const auto& [reason, count] : m.drops_by_reason) {
    std::cout << "  drop." << reason << "=" << count << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OPSER hybrid opportunistic routing simulator"};
  app.require_subcommand(1);

  // --- run ------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Run one scenario file");
  std::string scenario_path;
  std::string out_dir = ".";
  std::string protocol_override;
  std::optional<std::uint64_t> seed_override;
  bool with_trace = false;
  run_cmd->add_option("scenario", scenario_path, "Scenario file")->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed_override, "Seed override");
  run_cmd->add_option("--out-dir", out_dir, "Output directory");
  run_cmd->add_option("--protocol", protocol_override,
                      "Protocol override (opser|oppbcast|greedy_unicast)");
  run_cmd->add_flag("--trace", with_trace, "Write the full event trace");

  // --- sweep ----------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep file");
  std::string sweep_path;
  std::string sweep_out_dir = ".";
  sweep_cmd->add_option("sweep", sweep_path, "Sweep file")->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out-dir", sweep_out_dir, "Output directory");

  // --- analyze ----------------------------------------------------------------
  auto* an_cmd = app.add_subcommand("analyze", "Closed-form delivery and energy tables");
  std::string probs_arg = "0.5,0.5";
  int hops = 3;
  int an_nodes = 121;
  double e_tx = 66.192e-6, e_rx = 57.12e-6, degree = 3.64;
  an_cmd->add_option("--probs", probs_arg, "Per-candidate link probabilities");
  an_cmd->add_option("--hops", hops, "Hop count");
  an_cmd->add_option("--nodes", an_nodes, "Network size for the flood-cost table");
  an_cmd->add_option("--e-tx", e_tx, "Transmit cost per interest packet (J)");
  an_cmd->add_option("--e-rx", e_rx, "Receive cost per interest packet (J)");
  an_cmd->add_option("--degree", degree, "Mean subset degree");

  // --- validate ---------------------------------------------------------------
  auto* val_cmd = app.add_subcommand("validate", "Check invariants over a trace file");
  std::string trace_path;
  val_cmd->add_option("trace", trace_path, "Trace file")->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      Scenario sc = load_scenario(scenario_path);
      if (!protocol_override.empty()) scenario_set(sc, "run.protocol", protocol_override);
      std::uint64_t seed = seed_override.value_or(sc.seed);
      fs::create_directories(out_dir);

      std::ofstream trace_file;
      std::ostringstream trace_name;
      trace_name << out_dir << "/trace_" << sc.name << "_" << seed << ".log";
      if (with_trace) trace_file.open(trace_name.str());

      Simulation sim(sc, seed, with_trace ? &trace_file : nullptr);
      MetricsRecord m = sim.run();

      std::string csv_path = out_dir + "/run_" + sc.name + "_" + std::to_string(seed) + ".csv";
      std::ofstream csv(csv_path);
      csv << csv_header() << '\n' << csv_row(sc, seed, m) << '\n';

      print_summary(sc, seed, m);
      std::cout << "results: " << csv_path << "\n";
      if (with_trace) std::cout << "trace: " << trace_name.str() << "\n";
    } else if (*sweep_cmd) {
      SweepSpec spec = load_sweep(sweep_path);
      if (spec.scenario_path.empty())
        throw std::runtime_error("sweep file names no base scenario");
      fs::path base_path = spec.scenario_path;
      if (base_path.is_relative())
        base_path = fs::path(sweep_path).parent_path() / base_path;
      Scenario base = load_scenario(base_path.string());
      fs::create_directories(sweep_out_dir);
      int done = 0;
      auto results = run_experiment(spec, base, sweep_out_dir,
                                    [&](const RunPoint& pt, const MetricsRecord& m) {
                                      ++done;
                                      std::cout << "[" << done << "] " << pt.point
                                                << " seed=" << pt.seed << " pdr="
                                                << (pdr(m) ? fmt_double(*pdr(m)) : "n/a")
                                                << "\n";
                                    });
      std::cout << "rows: " << results.size() << "\n";
      std::cout << "results: " << sweep_out_dir << "/" << spec.out << ".csv\n";
      std::cout << "aggregates: " << sweep_out_dir << "/" << spec.out << "_agg.csv\n";
    } else if (*an_cmd) {
      std::vector<double> probs = parse_probs(probs_arg);
      auto profile = HopLinkProfile::uniform(probs, static_cast<std::size_t>(hops));
      double p_o = opportunistic_delivery_prob(profile);
      double best = 0.0;
      for (double p : probs) best = std::max(best, p);
      double p_u = unicast_delivery_prob(best, hops);
      std::cout << "delivery probability over " << hops << " hops, candidates {"
                << probs_arg << "}\n";
      std::cout << "  opportunistic P_O = " << fmt_double(p_o) << "\n";
      std::cout << "  best-candidate unicast P_U = " << fmt_double(p_u) << "\n";
      std::cout << "  dominance P_O >= P_U: "
                << (delivery_prob_dominance_check(profile) ? "yes" : "NO") << "\n";

      auto cost = cid_energy_cost(static_cast<std::size_t>(an_nodes),
                                  std::vector<double>(an_nodes, degree), e_tx, e_rx);
      std::cout << "interest-flood energy, N=" << an_nodes << ", mean degree "
                << fmt_double(degree) << "\n";
      std::cout << "  total = " << fmt_double(cost.total_j) << " J\n";
      std::cout << "  N*(E_tx + log(N)*E_rx) bound = " << fmt_double(cost.bound_j)
                << " J\n";
    } else if (*val_cmd) {
      std::ifstream in(trace_path);
      auto report = validate_trace(in);
      for (const auto& line : report.checks) std::cout << line << "\n";
      if (!report.ok) return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
