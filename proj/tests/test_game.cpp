#include <gtest/gtest.h>

#include "dynflow/game.hpp"
#include "dynflow/scenario.hpp"

using namespace dynflow;

namespace {

struct NoPne {
  Scenario sc = builtin_no_pne();
  const Network& net = sc.network;
  std::vector<Path> pursuer = enumerate_simple_paths(net, net.node("oP"), net.node("dP"));
  std::vector<Path> evader = enumerate_simple_paths(net, net.node("oE"), net.node("dE"));

  PathProfile profile(int p, int e) const {
    PathProfile out = default_profile(net, sc.players);
    out[0] = pursuer[static_cast<std::size_t>(p)];
    out[1] = evader[static_cast<std::size_t>(e)];
    return out;
  }
  CostVector costs(int p, int e) const { return evaluate_profile(net, *sc.discretization, sc.players, profile(p, e)); }
};

constexpr int top = 0, bottom = 1;

}  // namespace

TEST(Paths, EnumeratesInArcIdOrder) {
  Network n;
  for (const char* v : {"o", "a", "b", "d"}) n.add_node(v);
  n.add_arc("ob", "o", "b", 1, 1);
  n.add_arc("oa", "o", "a", 1, 1);
  n.add_arc("ad", "a", "d", 1, 1);
  n.add_arc("bd", "b", "d", 1, 1);
  n.add_arc("od1", "o", "d", 1, 1);
  n.add_arc("od2", "o", "d", 1, 1);
  const auto paths = enumerate_simple_paths(n, 0, 3);
  ASSERT_EQ(paths.size(), 4u);
  EXPECT_EQ(path_to_string(n, paths[0]), "oa ad");
  EXPECT_EQ(path_to_string(n, paths[1]), "ob bd");
  EXPECT_EQ(path_to_string(n, paths[2]), "od1");
  EXPECT_THROW(enumerate_simple_paths(n, 0, 3, 3), EnumerationError);
  EXPECT_THROW(enumerate_simple_paths(n, 3, 0), EnumerationError);
}

TEST(NoPneInstance, StrategySets) {
  NoPne g;
  ASSERT_EQ(g.pursuer.size(), 2u);
  ASSERT_EQ(g.evader.size(), 2u);
  EXPECT_EQ(path_to_string(g.net, g.pursuer[top]), "oP-v1 v1-v2 v2-d3 d3-dP");
  EXPECT_EQ(path_to_string(g.net, g.evader[bottom]), "oE-v7 v7-v8 v8-d6 d6-dE");
  for (std::size_t i = 2; i < g.sc.players.size(); ++i)
    EXPECT_EQ(enumerate_simple_paths(g.net, g.sc.players[i].origin, g.sc.players[i].destination).size(), 1u);
  EXPECT_TRUE(validate_scenario(to_json(g.sc)).ok());
}

TEST(NoPneInstance, PayoffsFormMatchingPennies) {
  NoPne g;
  auto pe = [&](int p, int e) {
    const auto c = g.costs(p, e);
    return std::pair(c[0], c[1]);
  };
  EXPECT_EQ(pe(top, top), std::pair(Rational(5), Rational(6)));
  EXPECT_EQ(pe(top, bottom), std::pair(Rational(6), Rational(5)));
  EXPECT_EQ(pe(bottom, bottom), std::pair(Rational(5), Rational(6)));
  EXPECT_EQ(pe(bottom, top), std::pair(Rational(6), Rational(5)));
}

TEST(NoPneInstance, BestResponsesCycle) {
  NoPne g;
  const auto& d = *g.sc.discretization;
  const auto evader_br = best_response(g.net, d, g.sc.players, g.profile(top, top), 1);
  EXPECT_EQ(evader_br.path, g.evader[bottom]);
  EXPECT_EQ(evader_br.cost, Rational(5));
  const auto pursuer_br = best_response(g.net, d, g.sc.players, g.profile(top, bottom), 0);
  EXPECT_EQ(pursuer_br.path, g.pursuer[bottom]);
  EXPECT_EQ(pursuer_br.cost, Rational(5));
}

TEST(NoPneInstance, EveryProfileIsOneButNotHalfEquilibrium) {
  NoPne g;
  const auto& d = *g.sc.discretization;
  for (int p : {top, bottom}) {
    for (int e : {top, bottom}) {
      const auto loose = epsilon_check(g.net, d, g.sc.players, g.profile(p, e), Rational(1));
      const auto tight = epsilon_check(g.net, d, g.sc.players, g.profile(p, e), Rational(1, 2));
      EXPECT_TRUE(loose.equilibrium);
      EXPECT_FALSE(tight.equilibrium);
      EXPECT_EQ(loose.max_improvement(), Rational(1));
      for (const auto& r : loose.players) EXPECT_GE(r.improvement, Rational(0));
    }
  }
  EXPECT_TRUE(exhaustive_pne_search(g.net, d, g.sc.players).empty());
}

TEST(Game, SinglePlayerTakesQuickestPath) {
  Network n;
  for (const char* v : {"o", "a", "b", "d"}) n.add_node(v);
  n.add_arc("oa", "o", "a", 2, 1);
  n.add_arc("ad", "a", "d", 2, 1);
  n.add_arc("ob", "o", "b", 1, 1);
  n.add_arc("bd", "b", "d", 1, 1);
  const std::vector<Player> players{{"p", 0, 3, 0, std::nullopt}};
  const Discretization d{1, 1};
  const auto br = best_response(n, d, players, default_profile(n, players), 0);
  EXPECT_EQ(path_to_string(n, br.path), "ob bd");
  EXPECT_EQ(br.cost, Rational(2));
  const auto report = epsilon_check(n, d, players, {br.path}, Rational(0));
  EXPECT_TRUE(report.equilibrium);
  EXPECT_EQ(report.players[0].improvement, Rational(0));
  const auto pne = exhaustive_pne_search(n, d, players);
  ASSERT_EQ(pne.size(), 1u);
  EXPECT_EQ(pne[0][0], br.path);
}

TEST(Game, IndependentPlayersCombineTheirOptima) {
  Network n;
  for (const char* v : {"o1", "d1", "o2", "d2"}) n.add_node(v);
  n.add_arc("fast1", "o1", "d1", 1, 1);
  n.add_arc("slow1", "o1", "d1", 3, 1);
  n.add_arc("fast2", "o2", "d2", 2, 1);
  n.add_arc("slow2", "o2", "d2", 5, 1);
  const std::vector<Player> players{{"a", 0, 1, 0, std::nullopt}, {"b", 2, 3, 1, std::nullopt}};
  const auto pne = exhaustive_pne_search(n, {1, 1}, players);
  ASSERT_EQ(pne.size(), 1u);
  EXPECT_EQ(path_to_string(n, pne[0][0]), "fast1");
  EXPECT_EQ(path_to_string(n, pne[0][1]), "fast2");
}

TEST(Game, EpsilonCheckIsMonotone) {
  NoPne g;
  const auto& d = *g.sc.discretization;
  bool previous = false;
  for (int k = 0; k <= 8; ++k) {
    const bool eq = epsilon_check(g.net, d, g.sc.players, g.profile(top, top), Rational(k, 4)).equilibrium;
    if (previous) {
      EXPECT_TRUE(eq);
    }
    previous = eq;
  }
  EXPECT_TRUE(previous);
}

TEST(Game, CostsRespectTransitLowerBound) {
  NoPne g;
  const auto costs = g.costs(top, bottom);
  const auto profile = g.profile(top, bottom);
  for (std::size_t i = 0; i < costs.size(); ++i) {
    Rational transit(0);
    for (ArcIndex e : profile[i]) transit += g.net.arc(e).transit_time;
    EXPECT_GE(costs[i], g.sc.players[i].release + transit);
  }
}
