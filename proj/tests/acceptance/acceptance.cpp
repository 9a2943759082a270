// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dynflow/continuous_flow.hpp"
#include "dynflow/convergence.hpp"
#include "dynflow/coupling.hpp"
#include "dynflow/game.hpp"
#include "support/random_scenarios.hpp"

using namespace dynflow;

namespace {

constexpr std::uint32_t kRandomScenarios = 60;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  const char* title;
  double time_limit_seconds;
  std::function<Outcome()> check;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

struct GameFixture {
  Scenario sc = builtin_no_pne();
  std::vector<Path> pursuer = enumerate_simple_paths(sc.network, sc.network.node("oP"), sc.network.node("dP"));
  std::vector<Path> evader = enumerate_simple_paths(sc.network, sc.network.node("oE"), sc.network.node("dE"));

  PathProfile profile(std::size_t p, std::size_t e) const {
    PathProfile out = default_profile(sc.network, sc.players);
    out[0] = pursuer.at(p);
    out[1] = evader.at(e);
    return out;
  }
};

Outcome no_pne_payoffs() {
  const GameFixture g;
  if (g.pursuer.size() != 2 || g.evader.size() != 2) return {false, "pursuer/evader do not have two paths each"};
  // expected (pursuer, evader) costs indexed by [pursuer path][evader path], 0 = top
  const int expected[2][2][2] = {{{5, 6}, {6, 5}}, {{6, 5}, {5, 6}}};
  std::ostringstream detail;
  bool ok = true;
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t e = 0; e < 2; ++e) {
      const auto c = evaluate_profile(g.sc.network, *g.sc.discretization, g.sc.players, g.profile(p, e));
      detail << (p ? "B" : "T") << (e ? "B" : "T") << "=(" << c[0] << "," << c[1] << ") ";
      ok = ok && c[0] == Rational(expected[p][e][0]) && c[1] == Rational(expected[p][e][1]);
    }
  }
  return {ok, detail.str()};
}

Outcome no_pne_search() {
  const GameFixture g;
  const auto& d = *g.sc.discretization;
  const auto found = exhaustive_pne_search(g.sc.network, d, g.sc.players);
  bool ok = found.empty();
  int loose = 0, tight = 0;
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t e = 0; e < 2; ++e) {
      loose += epsilon_check(g.sc.network, d, g.sc.players, g.profile(p, e), Rational(1)).equilibrium;
      tight += epsilon_check(g.sc.network, d, g.sc.players, g.profile(p, e), Rational(1, 2)).equilibrium;
    }
  }
  ok = ok && loose == 4 && tight == 0;
  return {ok, std::to_string(found.size()) + " PNE; eps=1 holds for " + std::to_string(loose) +
                  "/4 profiles, eps=1/2 for " + std::to_string(tight) + "/4"};
}

Outcome refined_time_golden() {
  const Discretization d{Rational(1, 2), Rational(1, 4)};
  DiscreteFlowFunctions f(1, 1, d);
  const std::pair<int, int> pattern[] = {{1, 2}, {2, 1}, {3, 4}, {4, 1}};
  for (auto [step, count] : pattern)
    for (int k = 0; k < count; ++k) f.record_entry(0, 0, step);
  f.finalize();
  const Commodity c{"j", 0, 1, {0}, {}};
  const Rational l5 = refined_arrival(f, c, 0, 5, 0);
  const std::int64_t k = position_in_step(l5, f.inflow_rate(0, 0, l5), d);
  return {l5 == Rational(5, 4) && k == 2, "l(5) = " + l5.to_string() + ", k = " + std::to_string(k)};
}

struct SuiteRun {
  fixtures::RandomScenario s;
  std::vector<Packet> packets;
  EventLog log;
  DiscreteFlowFunctions f;
};

SuiteRun run_discrete(std::uint32_t seed) {
  auto s = fixtures::random_scenario(seed);
  auto packets = make_packets(s.commodities, s.discretization);
  auto log = network_loading(s.network, discretize(s.network, s.discretization), packets);
  auto f = extract_rates(s.network.arc_count(), s.commodities.size(), packets, log, s.discretization);
  return {std::move(s), std::move(packets), std::move(log), std::move(f)};
}

Outcome exit_identity_suite() {
  std::size_t checked = 0, failed = 0;
  for (std::uint32_t seed = 1; seed <= kRandomScenarios; ++seed) {
    const auto r = run_discrete(seed);
    std::size_t n = 0;
    failed += check_exit_identity(r.s.network, r.s.commodities, r.f, &n).size();
    checked += n;
  }
  return {failed == 0 && checked > 0, std::to_string(kRandomScenarios) + " scenarios, " + std::to_string(checked) +
                                          " packet/arc pairs, " + std::to_string(failed) + " mismatches"};
}

Outcome waiting_bound_suite() {
  std::size_t samples = 0, violations = 0, off_support = 0;
  Rational worst;
  bool first = true;
  for (std::uint32_t seed = 1; seed <= kRandomScenarios; ++seed) {
    const auto r = run_discrete(seed);
    const auto& net = r.s.network;
    const auto& d = r.s.discretization;
    for (std::size_t j = 0; j < r.s.commodities.size(); ++j) {
      for (ArcIndex e : r.s.commodities[j].path) {
        const DiscreteQueueStats stats(r.f, e, net.arc(e).transit_time);
        const Rational kappa = rate_bound(net, r.s.commodities, e);
        const auto res = check_waiting_bound(stats, j, net.arc(e).capacity, kappa, d,
                                             entrance_times(r.f, r.s.commodities[j], j, e));
        samples += res.samples;
        if (!res.ok) ++violations;
        if (res.samples && (first || res.worst_slack < worst)) worst = res.worst_slack, first = false;

        // grid points, where commodity j need not be entering
        std::vector<Rational> grid;
        for (std::int64_t t = 0; t <= r.log.last_step; ++t) grid.push_back(Rational(t) * d.alpha);
        if (!check_waiting_bound(stats, j, net.arc(e).capacity, kappa, d, grid).ok) ++off_support;
      }
    }
  }
  return {violations == 0 && samples > 0,
          std::to_string(samples) + " entrance-time samples, " + std::to_string(violations) +
              " violations, min slack " + fmt(worst.to_double()) + "; info: " + std::to_string(off_support) +
              " arc/commodity pairs exceed it at grid points without an entering packet"};
}

Outcome loader_suite() {
  std::size_t violations = 0, arcs = 0;
  std::string first_violation;
  for (std::uint32_t seed = 1; seed <= kRandomScenarios; ++seed) {
    const auto s = fixtures::random_scenario(seed);
    const auto flow = load_network(s.network, s.commodities);
    const auto v = verify_flow(s.network, flow);
    if (!v.empty() && first_violation.empty()) first_violation = "seed " + std::to_string(seed) + ": " + v.front();
    violations += v.size();
    arcs += s.network.arc_count();
  }
  return {violations == 0, std::to_string(kRandomScenarios) + " scenarios, " + std::to_string(arcs) + " arcs, " +
                               std::to_string(violations) + " violations" +
                               (first_violation.empty() ? "" : " (" + first_violation + ")")};
}

struct MergeScenario {
  Network net;
  std::vector<Commodity> commodities;
  MergeScenario() {
    for (const char* v : {"s1", "s2", "m", "d"}) net.add_node(v);
    net.add_arc("s1-m", "s1", "m", 1, 2);
    net.add_arc("s2-m", "s2", "m", 1, 2);
    net.add_arc("m-d", "m", "d", 1, 1);
    commodities.push_back({"A", 0, 3, {0, 2}, {{{0, 2, 1}}}});
    commodities.push_back({"B", 1, 3, {1, 2}, {{{Rational(1, 2), 2, 1}}}});
  }
};

const ConvergenceReport& merge_sweep() {
  static const ConvergenceReport report = [] {
    const MergeScenario m;
    SweepConfig cfg;
    cfg.alpha0 = Rational(1, 2);
    cfg.levels = 5;
    cfg.ratio = Rational(1, 2);
    return run_sweep(m.net, m.commodities, cfg);
  }();
  return report;
}

Outcome convergence_trend() {
  const auto& r = merge_sweep();
  const auto& first = r.levels.front();
  const auto& last = r.levels.back();
  const Rational limit(3, 5);
  const bool arrival = last.max_arrival_error <= limit * first.max_arrival_error;
  const bool cumflow = last.max_cumflow_error <= limit * first.max_cumflow_error;
  const bool rate = r.fit.exact || (r.fit.slope && *r.fit.slope >= 0.4);
  std::ostringstream detail;
  detail << "arrival " << fmt(first.max_arrival_error.to_double()) << " -> " << fmt(last.max_arrival_error.to_double())
         << ", cumflow " << fmt(first.max_cumflow_error.to_double()) << " -> "
         << fmt(last.max_cumflow_error.to_double()) << ", fitted rate "
         << (r.fit.exact ? std::string("exact") : r.fit.slope ? fmt(*r.fit.slope) : std::string("none"));
  return {arrival && cumflow && rate, detail.str()};
}

Outcome hypothetical_identity() {
  const auto& r = merge_sweep();
  std::size_t ok_levels = 0, packets = 0;
  for (const auto& l : r.levels) {
    ok_levels += l.hypothetical_identity;
    packets += l.packets;
  }
  return {ok_levels == r.levels.size(),
          std::to_string(ok_levels) + "/" + std::to_string(r.levels.size()) + " levels exact, " +
              std::to_string(packets) + " packets"};
}

Outcome closed_form_single_arc() {
  Network net;
  net.add_node("o");
  net.add_node("d");
  net.add_arc("e", "o", "d", 1, 1);
  const std::vector<Commodity> cs{{"j", 0, 1, {0}, {{{0, 1, 2}}}}};
  const auto flow = load_network(net, cs);
  bool exact = verify_flow(net, flow).empty();
  for (int k = 0; k <= 64; ++k) {
    const Rational phi(k, 32);
    exact = exact && flow.arrival_time(0, phi, 1) == 1 + phi;
  }
  SweepConfig cfg;
  cfg.alpha0 = Rational(1, 2);
  cfg.levels = 5;
  const auto report = run_sweep(net, cs, cfg);
  const auto& last = report.levels.back();
  Rational worst_at_d;
  for (const auto& rec : last.records)
    if (rec.node_pos == 1) worst_at_d = std::max(worst_at_d, abs(rec.discrete_time - (1 + Rational(rec.packet) * last.discretization.beta)));
  const bool converged = last.discretization.alpha == Rational(1, 32) && worst_at_d < Rational(15, 100);
  return {exact && converged, std::string("loader ") + (exact ? "exact" : "inexact") +
                                  ", max error at alpha=" + last.discretization.alpha.to_string() + ": " +
                                  fmt(worst_at_d.to_double())};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "no-PNE instance payoffs", 1, no_pne_payoffs},
      {2, "no-PNE search and epsilon checks", 1, no_pne_search},
      {3, "refined-time golden values", 1, refined_time_golden},
      {4, "exit-time identity on randomized suite", 30, exit_identity_suite},
      {5, "waiting-time bound on randomized suite", 30, waiting_bound_suite},
      {6, "continuous loader feasibility on randomized suite", 30, loader_suite},
      {7, "convergence trend on merge sweep", 120, convergence_trend},
      {8, "hypothetical-flow identity on merge sweep", 10, hypothetical_identity},
      {9, "closed-form single-arc oracle", 30, closed_form_single_arc},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %d %s: %s [%.3fs, limit %gs%s]\n", pass ? "PASS" : "FAIL", c.number, c.title, o.detail.c_str(),
                secs, c.time_limit_seconds, in_time ? "" : ", too slow");
  }
  return failures;
}
