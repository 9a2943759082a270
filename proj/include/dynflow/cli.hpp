#pragma once

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynflow/continuous_flow.hpp"
#include "dynflow/convergence.hpp"
#include "dynflow/coupling.hpp"
#include "dynflow/discrete_sim.hpp"
#include "dynflow/export.hpp"
#include "dynflow/game.hpp"
#include "dynflow/scenario.hpp"

namespace dynflow {

namespace cli_detail {

// Failures that map to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Rational parse_flag(const std::string& text, const char* flag) {
  try {
    return Rational::parse(text);
  } catch (const std::exception&) {
    throw UsageError(std::string("--") + flag + ": '" + text + "' is not a rational number");
  }
}

// Writes to the named file, or to `fallback` when the name is empty.
inline void emit(const std::string& filename, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (filename.empty()) {
    body(fallback);
    return;
  }
  std::ostringstream buf;
  body(buf);
  std::ofstream f(filename, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + filename + "'");
  f << buf.str();
}

inline const Discretization& require_discretization(const Scenario& sc) {
  if (!sc.discretization) throw UsageError("scenario needs a discretization for this command");
  return *sc.discretization;
}

inline const Discretization& require_game(const Scenario& sc) {
  if (sc.players.empty()) throw UsageError("scenario has no players");
  return require_discretization(sc);
}

}  // namespace cli_detail

// Exit codes: 0 success, 1 validation or usage error, 2 runtime failure
// (caps exceeded, invariant violations).
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Packet-routing and flow-over-time toolkit with exact rational arithmetic"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string scenario_file, out_file, summary_file, epsilon_text = "0", alpha0_text = "1/2", ratio_text = "1/2";
  std::string builtin_name;
  int levels = 5;
  std::size_t cap = 10000;
  bool decimal = false, sequential = false;

  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  };
  auto add_out = [&](CLI::App* sub, const char* what) { sub->add_option("--out", out_file, what); };
  auto add_decimal = [&](CLI::App* sub) {
    sub->add_flag("--decimal", decimal, "Add approximate decimal columns next to exact values");
  };

  auto* sim_d = app.add_subcommand("simulate-discrete", "Run the packet-routing network loading");
  add_scenario(sim_d);
  add_out(sim_d, "Event log CSV (default: standard output)");

  auto* sim_c = app.add_subcommand("simulate-continuous", "Load the flow over time along the fixed paths");
  add_scenario(sim_c);
  add_out(sim_c, "Breakpoint CSV (default: standard output)");
  add_decimal(sim_c);

  auto* couple = app.add_subcommand("couple", "Refined arrival times of the discrete run");
  add_scenario(couple);
  add_out(couple, "Refined-times CSV (default: standard output)");
  add_decimal(couple);

  auto* converge = app.add_subcommand("converge", "Sweep discretizations against the continuous flow");
  add_scenario(converge);
  converge->add_option("--levels", levels, "Number of levels")->check(CLI::Range(1, 30));
  converge->add_option("--alpha0", alpha0_text, "Step length of the first level");
  converge->add_option("--ratio", ratio_text, "Factor between consecutive step lengths");
  add_out(converge, "Per-packet error records CSV");
  converge->add_option("--summary", summary_file, "Per-level summary CSV (default: standard output)");
  converge->add_flag("--sequential", sequential, "Run levels one after another");
  add_decimal(converge);

  auto* check_eq = app.add_subcommand("check-equilibrium", "Certify an epsilon-equilibrium for the players' paths");
  add_scenario(check_eq);
  check_eq->add_option("--epsilon", epsilon_text, "Tolerance in seconds");
  check_eq->add_option("--cap", cap, "Maximum number of paths per player");
  add_out(check_eq, "Equilibrium report CSV (default: standard output)");
  add_decimal(check_eq);

  auto* search = app.add_subcommand("search-pne", "Exhaustive search for pure Nash equilibria");
  add_scenario(search);
  search->add_option("--cap", cap, "Maximum number of paths per player and of profiles");

  auto* builtin = app.add_subcommand("builtin", "Write a built-in scenario");
  builtin->add_option("name", builtin_name, "Built-in scenario name")->required()->check(CLI::IsMember({"no-pne"}));
  add_out(builtin, "Scenario JSON (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (builtin->parsed()) {
      const std::string text = to_json(builtin_no_pne()).dump(2) + "\n";
      emit(out_file, out, [&](std::ostream& os) { os << text; });
      return 0;
    }

    const Scenario sc = load_scenario_file(scenario_file);
    const Network& net = sc.network;

    if (sim_d->parsed()) {
      const Discretization& d = require_discretization(sc);
      const ScenarioPackets sp = scenario_packets(sc);
      const EventLog log = network_loading(net, discretize(net, d), sp.packets);
      emit(out_file, out, [&](std::ostream& os) { write_event_log_csv(os, net, sp, log); });
      return 0;
    }

    if (sim_c->parsed()) {
      const FlowOverTime flow = load_network(net, sc.commodities);
      const auto violations = verify_flow(net, flow);
      if (!violations.empty()) {
        for (const auto& v : violations) err << "violation: " << v << '\n';
        return 2;
      }
      emit(out_file, out, [&](std::ostream& os) { write_breakpoints_csv(os, net, flow, decimal); });
      return 0;
    }

    if (couple->parsed()) {
      const Discretization& d = require_discretization(sc);
      const auto packets = make_packets(sc.commodities, d);
      const EventLog log = network_loading(net, discretize(net, d), packets);
      const DiscreteFlowFunctions f = extract_rates(net.arc_count(), sc.commodities.size(), packets, log, d);
      const auto failures = check_exit_identity(net, sc.commodities, f);
      if (!failures.empty()) {
        for (const auto& x : failures)
          err << "exit identity fails for commodity '" << sc.commodities[x.commodity].id << "' packet " << x.packet
              << " on arc '" << net.arc(x.arc).id << "': " << x.refined_exit << " != " << x.exit_time << '\n';
        return 2;
      }
      const auto times = refined_times(net, sc.commodities, f);
      emit(out_file, out, [&](std::ostream& os) { write_refined_times_csv(os, net, sc.commodities, times, decimal); });
      return 0;
    }

    if (converge->parsed()) {
      SweepConfig cfg;
      cfg.levels = levels;
      cfg.alpha0 = parse_flag(alpha0_text, "alpha0");
      cfg.ratio = parse_flag(ratio_text, "ratio");
      cfg.parallel = !sequential;
      if (cfg.alpha0.sign() <= 0) throw UsageError("--alpha0 must be positive");
      if (cfg.ratio.sign() <= 0 || !(cfg.ratio < Rational(1))) throw UsageError("--ratio must lie in (0, 1)");
      const ConvergenceReport report = run_sweep(net, sc.commodities, cfg);
      for (const auto& l : report.levels)
        for (const auto& w : l.warnings) err << "level " << l.level << ": warning: " << w << '\n';
      if (!out_file.empty())
        emit(out_file, out, [&](std::ostream& os) { write_records_csv(os, net, sc.commodities, report, decimal); });
      emit(summary_file, out, [&](std::ostream& os) { write_summary_csv(os, report, decimal); });
      return 0;
    }

    if (check_eq->parsed()) {
      const Discretization& d = require_game(sc);
      const Rational eps = parse_flag(epsilon_text, "epsilon");
      if (eps.sign() < 0) throw UsageError("--epsilon must be non-negative");
      const PathProfile profile = default_profile(net, sc.players, cap);
      const EquilibriumReport report = epsilon_check(net, d, sc.players, profile, eps, cap);
      emit(out_file, out, [&](std::ostream& os) { write_equilibrium_csv(os, net, sc.players, report, decimal); });
      err << (report.equilibrium ? "epsilon-equilibrium" : "not an epsilon-equilibrium") << " at epsilon "
          << eps << " (max improvement " << report.max_improvement() << ")\n";
      return 0;
    }

    if (search->parsed()) {
      const Discretization& d = require_game(sc);
      const auto found = exhaustive_pne_search(net, d, sc.players, cap);
      if (found.empty()) {
        out << "no pure Nash equilibrium\n";
        return 0;
      }
      out << found.size() << " pure Nash equilibri" << (found.size() == 1 ? "um" : "a") << '\n';
      for (std::size_t k = 0; k < found.size(); ++k)
        for (std::size_t i = 0; i < sc.players.size(); ++i)
          out << k + 1 << ' ' << sc.players[i].id << ": " << path_to_string(net, found[k][i]) << '\n';
      return 0;
    }
  } catch (const ScenarioError& e) {
    for (const auto& dgn : e.diagnostics()) err << "error: " << dgn.to_string() << '\n';
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace dynflow
