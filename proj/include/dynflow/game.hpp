#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynflow/discrete_sim.hpp"
#include "dynflow/model.hpp"

namespace dynflow {

using PathProfile = std::vector<Path>;
using CostVector = std::vector<Rational>;

class EnumerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All simple o-d paths, ordered lexicographically by their arc-id sequences.
inline std::vector<Path> enumerate_simple_paths(const Network& net, NodeIndex o, NodeIndex d, std::size_t cap = 10000) {
  if (o == d) throw std::invalid_argument("origin equals destination");
  std::vector<Path> out;
  std::vector<bool> visited(net.node_count(), false);
  Path current;
  auto dfs = [&](auto&& self, NodeIndex v) -> void {
    if (v == d) {
      if (out.size() == cap) throw EnumerationError("more than " + std::to_string(cap) + " simple paths");
      out.push_back(current);
      return;
    }
    visited[v] = true;
    std::vector<ArcIndex> outs = net.out_arcs(v);
    std::sort(outs.begin(), outs.end(), [&](ArcIndex a, ArcIndex b) { return net.arc(a).id < net.arc(b).id; });
    for (ArcIndex e : outs) {
      const NodeIndex w = net.arc(e).head;
      if (visited[w]) continue;
      current.push_back(e);
      self(self, w);
      current.pop_back();
    }
    visited[v] = false;
  };
  dfs(dfs, o);
  if (out.empty())
    throw EnumerationError("destination '" + net.node_id(d) + "' unreachable from '" + net.node_id(o) + "'");
  return out;
}

inline std::string path_to_string(const Network& net, const Path& p) {
  std::string s;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k) s += ' ';
    s += net.arc(p[k]).id;
  }
  return s;
}

// Lexicographic comparison by arc ids, used for deterministic tie breaks.
inline bool path_less(const Network& net, const Path& a, const Path& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [&](ArcIndex x, ArcIndex y) {
    return net.arc(x).id < net.arc(y).id;
  });
}

inline void check_profile(const Network& net, const std::vector<Player>& players, const PathProfile& profile) {
  if (profile.size() != players.size()) throw std::invalid_argument("profile needs one path per player");
  for (std::size_t i = 0; i < players.size(); ++i) {
    const std::string why = net.check_path(profile[i], players[i].origin, players[i].destination);
    if (!why.empty()) throw std::invalid_argument("player '" + players[i].id + "': " + why);
  }
}

// Arrival time alpha * c_hat of every player when each follows its profile path.
inline CostVector evaluate_profile(const Network& net, const Discretization& d, const std::vector<Player>& players,
                                   const PathProfile& profile, const SimulationConfig& config = {}) {
  check_profile(net, players, profile);
  std::vector<Packet> packets;
  packets.reserve(players.size());
  for (std::size_t i = 0; i < players.size(); ++i) {
    const Rational steps = players[i].release / d.alpha;
    if (!steps.is_integer() || steps.sign() < 0)
      throw std::invalid_argument("player '" + players[i].id + "' is not released on the time grid");
    packets.push_back({i, 1, profile[i], steps.to_int64()});
  }
  const EventLog log = network_loading(net, discretize(net, d), packets, config);
  CostVector costs;
  costs.reserve(players.size());
  for (std::size_t i = 0; i < players.size(); ++i) costs.push_back(Rational(log.arrival_step[i]) * d.alpha);
  return costs;
}

// Each player's path from the scenario, or its lexicographically first path.
inline PathProfile default_profile(const Network& net, const std::vector<Player>& players, std::size_t cap = 10000) {
  PathProfile out;
  for (const auto& p : players)
    out.push_back(p.path ? *p.path : enumerate_simple_paths(net, p.origin, p.destination, cap).front());
  return out;
}

struct BestResponse {
  Path path;
  Rational cost;
};

inline BestResponse best_response(const Network& net, const Discretization& d, const std::vector<Player>& players,
                                  const PathProfile& profile, std::size_t player, std::size_t cap = 10000,
                                  const SimulationConfig& config = {}) {
  const auto candidates = enumerate_simple_paths(net, players.at(player).origin, players[player].destination, cap);
  std::optional<BestResponse> best;
  PathProfile trial = profile;
  for (const auto& path : candidates) {
    trial[player] = path;
    const Rational cost = evaluate_profile(net, d, players, trial, config)[player];
    // Candidates arrive in lexicographic order, so strict improvement keeps
    // the first path among ties.
    if (!best || cost < best->cost) best = BestResponse{path, cost};
  }
  return *best;
}

struct PlayerReport {
  std::size_t player = 0;
  Rational current_cost;
  Path best_path;
  Rational best_cost;
  Rational improvement;  // current_cost - best_cost, never negative
};

struct EquilibriumReport {
  Rational epsilon;
  std::vector<PlayerReport> players;
  bool equilibrium = true;

  Rational max_improvement() const {
    Rational m(0);
    for (const auto& p : players) m = std::max(m, p.improvement);
    return m;
  }
};

inline EquilibriumReport epsilon_check(const Network& net, const Discretization& d, const std::vector<Player>& players,
                                       const PathProfile& profile, const Rational& epsilon, std::size_t cap = 10000,
                                       const SimulationConfig& config = {}) {
  if (epsilon.sign() < 0) throw std::invalid_argument("epsilon must be non-negative");
  const CostVector costs = evaluate_profile(net, d, players, profile, config);
  EquilibriumReport report;
  report.epsilon = epsilon;
  for (std::size_t i = 0; i < players.size(); ++i) {
    const BestResponse br = best_response(net, d, players, profile, i, cap, config);
    PlayerReport r{i, costs[i], br.path, br.cost, costs[i] - br.cost};
    if (r.improvement.sign() < 0) throw InvariantViolation("best response is worse than the current path");
    if (epsilon < r.improvement) report.equilibrium = false;
    report.players.push_back(std::move(r));
  }
  return report;
}

// Every exact pure Nash equilibrium, in lexicographic profile order.
inline std::vector<PathProfile> exhaustive_pne_search(const Network& net, const Discretization& d,
                                                      const std::vector<Player>& players, std::size_t cap = 10000,
                                                      const SimulationConfig& config = {}) {
  std::vector<std::vector<Path>> strategies;
  std::size_t product = 1;
  for (const auto& p : players) {
    strategies.push_back(enumerate_simple_paths(net, p.origin, p.destination, cap));
    product *= strategies.back().size();
    if (product > cap) throw EnumerationError("more than " + std::to_string(cap) + " strategy profiles");
  }
  std::vector<PathProfile> found;
  std::vector<std::size_t> choice(players.size(), 0);
  while (true) {
    PathProfile profile;
    for (std::size_t i = 0; i < players.size(); ++i) profile.push_back(strategies[i][choice[i]]);
    if (epsilon_check(net, d, players, profile, Rational(0), cap, config).equilibrium) found.push_back(profile);
    std::size_t k = players.size();
    while (k > 0) {
      --k;
      if (++choice[k] < strategies[k].size()) break;
      choice[k] = 0;
      if (k == 0) return found;
    }
    if (players.empty()) return found;
  }
}

// Pursuer-evader instance without a pure Nash equilibrium. The pursuer
// (player 1) wants to share a branch with the evader (player 2); four
// single-path players block whichever branch the evader also uses.
inline Scenario builtin_no_pne() {
  Scenario s;
  Network& n = s.network;
  for (const char* v : {"oP", "oE", "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "d3", "d4", "d5", "d6", "dP", "dE"})
    n.add_node(v);
  const Rational one(1), two(2);
  int next = 1;
  auto arc = [&](const std::string& from, const std::string& to, const Rational& tau, bool long_arc = false) {
    n.add_arc(from + "-" + to, from, to, tau, one, long_arc ? 0 : next++);
  };
  arc("oP", "v1", one);
  arc("oP", "v3", one);
  arc("oE", "v5", one);
  arc("oE", "v7", one);
  arc("v1", "v2", two);
  arc("v3", "v4", two);
  arc("v5", "v6", two);
  arc("v7", "v8", two);
  arc("v5", "v2", two, true);
  arc("v7", "v4", two, true);
  arc("v1", "v6", one, true);
  arc("v3", "v8", one, true);
  arc("v2", "d3", one);
  arc("d3", "dP", one);
  arc("v4", "d4", one);
  arc("d4", "dP", one);
  arc("v6", "d5", one);
  arc("d5", "dE", one);
  arc("v8", "d6", one);
  arc("d6", "dE", one);

  auto path = [&](std::initializer_list<const char*> ids) {
    Path p;
    for (const char* id : ids) p.push_back(n.arc_by_id(id));
    return p;
  };
  auto player = [&](const std::string& id, const char* o, const char* d, std::optional<Path> p) {
    s.players.push_back({id, n.node(o), n.node(d), Rational(0), std::move(p)});
  };
  player("pursuer", "oP", "dP", path({"oP-v1", "v1-v2", "v2-d3", "d3-dP"}));
  player("evader", "oE", "dE", path({"oE-v5", "v5-v6", "v6-d5", "d5-dE"}));
  player("p3", "oE", "d3", path({"oE-v5", "v5-v2", "v2-d3"}));
  player("p4", "oE", "d4", path({"oE-v7", "v7-v4", "v4-d4"}));
  player("p5", "oP", "d5", path({"oP-v1", "v1-v6", "v6-d5"}));
  player("p6", "oP", "d6", path({"oP-v3", "v3-v8", "v8-d6"}));
  s.discretization = Discretization{one, one};
  return s;
}

}  // namespace dynflow
