#include <gtest/gtest.h>

#include "dynflow/game.hpp"
#include "dynflow/model.hpp"
#include "dynflow/scenario.hpp"

using namespace dynflow;

TEST(Grid, RoundsToMultiplesOfTheStep) {
  EXPECT_EQ(floor_to_grid(Rational(23, 10), Rational(1, 2)), Rational(2));
  EXPECT_EQ(ceil_to_grid(Rational(23, 10), Rational(1, 2)), Rational(5, 2));
  EXPECT_EQ(ceil_to_grid(Rational(2), Rational(1, 2)), Rational(2));
  EXPECT_EQ(ceil_to_grid(Rational(1, 3), Rational(1, 4)), Rational(1, 2));
  EXPECT_THROW(floor_to_grid(Rational(-1), Rational(1)), std::invalid_argument);
  EXPECT_THROW(ceil_to_grid(Rational(1), Rational(0)), std::invalid_argument);
}

TEST(Grid, FloorAndCeilBracketTheValue) {
  const Rational step(2, 7);
  for (int k = 0; k < 40; ++k) {
    const Rational x(k, 9);
    const Rational lo = floor_to_grid(x, step), hi = ceil_to_grid(x, step);
    EXPECT_LE(lo, x);
    EXPECT_LE(x, hi);
    EXPECT_EQ(hi - lo, (x / step).is_integer() ? Rational(0) : step);
    EXPECT_TRUE((lo / step).is_integer());
    EXPECT_TRUE((hi / step).is_integer());
    EXPECT_EQ(ceil_to_grid(hi, step), hi);
  }
}

namespace {

Network one_arc(Rational tau, Rational nu) {
  Network n;
  n.add_node("o");
  n.add_node("d");
  n.add_arc("e", "o", "d", tau, nu);
  return n;
}

}  // namespace

TEST(Discretize, StepsAndPacketsPerStep) {
  auto a = discretize(one_arc(Rational(23, 10), 1), {Rational(1, 2), Rational(1, 2)});
  EXPECT_EQ(a[0].steps, 5);
  auto b = discretize(one_arc(1, 1), {1, 1});
  EXPECT_EQ(b[0].packets_per_step, Rational(1));
  auto c = discretize(one_arc(1, 1), {Rational(1, 2), Rational(1, 5)});
  EXPECT_EQ(c[0].packets_per_step, Rational(5, 2));
}

TEST(Discretize, WarnsWhenPreconditionsFail) {
  EXPECT_FALSE(discretization_warnings(one_arc(1, 1), {1, 1}).empty());
  EXPECT_TRUE(discretization_warnings(one_arc(1, 4), {Rational(1, 2), Rational(1, 4)}).empty());
}

TEST(RateBound, MatchesTheDefinition) {
  Network single = one_arc(1, 1);
  Commodity c{"A", 0, 1, {0}, {{{0, 1, 1}}}};
  EXPECT_EQ(rate_bound(single, {c}, 0), Rational(2));

  Network merge;
  for (const char* v : {"a", "b", "u", "w"}) merge.add_node(v);
  merge.add_arc("au", "a", "u", 1, 1);
  merge.add_arc("bu", "b", "u", 1, 2);
  const ArcIndex e = merge.add_arc("uw", "u", "w", 1, 1);
  EXPECT_EQ(rate_bound(merge, {}, e), Rational(5));

  EXPECT_EQ(rate_bound(one_arc(1, 3), {}, 0), Rational(4));
}

TEST(Network, ChecksPaths) {
  Network n;
  for (const char* v : {"a", "b", "c"}) n.add_node(v);
  const ArcIndex ab = n.add_arc("ab", "a", "b", 1, 1);
  const ArcIndex ba = n.add_arc("ba", "b", "a", 1, 1);
  const ArcIndex bc = n.add_arc("bc", "b", "c", 1, 1);
  EXPECT_EQ(n.check_path({ab, bc}, 0, 2), "");
  EXPECT_EQ(n.check_path({ab, ba, ab, bc}, 0, 2), "path not simple");
  EXPECT_EQ(n.check_path({ab}, 0, 2), "path does not end at the destination");
  EXPECT_EQ(n.check_path({}, 0, 2), "path is empty");
  EXPECT_THROW(n.add_arc("ab", "a", "c", 1, 1), std::invalid_argument);
  EXPECT_EQ(n.arc(ab).merge_priority, 0);
  EXPECT_EQ(n.arc(bc).merge_priority, 2);
}

namespace {

json base_doc() {
  return json::parse(R"({
    "nodes": ["o", "m", "d"],
    "arcs": [
      {"id": "om", "from": "o", "to": "m", "transit_time": "1/2", "capacity": 1},
      {"id": "md", "from": "m", "to": "d", "transit_time": "0.75", "capacity": "3/2", "merge_priority": 4}
    ],
    "commodities": [
      {"id": "A", "origin": "o", "destination": "d", "path": ["om", "md"],
       "supply": [{"start": "0", "end": "1", "rate": "2"}, {"start": "2", "end": "5/2", "rate": "1"}]}
    ],
    "discretization": {"alpha": "1/4", "beta": "1/8"}
  })");
}

bool has_message(const ScenarioResult& r, const std::string& text) {
  for (const auto& d : r.diagnostics)
    if (d.message.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Scenario, ParsesExactValues) {
  const Scenario sc = parse_scenario(base_doc());
  EXPECT_EQ(sc.network.arc(0).transit_time, Rational(1, 2));
  EXPECT_EQ(sc.network.arc(1).transit_time, Rational(3, 4));
  EXPECT_EQ(sc.network.arc(1).merge_priority, 4);
  EXPECT_EQ(sc.commodities[0].supply.mass(), Rational(5, 2));
  EXPECT_EQ(sc.discretization->beta, Rational(1, 8));
}

TEST(Scenario, ReportsNonPositiveTransitTime) {
  json doc = base_doc();
  doc["arcs"][0]["transit_time"] = "0";
  const auto r = validate_scenario(doc);
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(has_message(r, "transit time must be positive"));
  EXPECT_EQ(r.diagnostics.front().path, "/arcs/0/transit_time");
}

TEST(Scenario, ReportsNonSimplePath) {
  json doc = base_doc();
  doc["arcs"].push_back({{"id", "mo"}, {"from", "m"}, {"to", "o"}, {"transit_time", "1"}, {"capacity", "1"}});
  doc["commodities"][0]["path"] = {"om", "mo", "om", "md"};
  const auto r = validate_scenario(doc);
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(has_message(r, "path not simple"));
}

TEST(Scenario, ReportsEveryProblem) {
  json doc = base_doc();
  doc["arcs"][1]["capacity"] = "-1";
  doc["commodities"][0]["supply"] = json::array({{{"start", "1"}, {"end", "0"}, {"rate", "1"}}});
  doc["commodities"][0]["origin"] = "nowhere";
  const auto r = validate_scenario(doc);
  EXPECT_GE(r.diagnostics.size(), 3u);
  EXPECT_TRUE(has_message(r, "capacity must be positive"));
}

TEST(Scenario, RejectsPlayersOffTheGrid) {
  json doc = base_doc();
  doc["players"] = json::array({{{"id", "p"}, {"origin", "o"}, {"destination", "d"}, {"release", "1/3"}}});
  EXPECT_FALSE(validate_scenario(doc).ok());
  doc["players"][0]["release"] = "1/2";
  EXPECT_TRUE(validate_scenario(doc).ok());
}

TEST(Scenario, BuiltinInstanceRoundTrips) {
  const Scenario sc = builtin_no_pne();
  const json doc = to_json(sc);
  const auto r = validate_scenario(doc);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(to_json(*r.scenario), doc);
  EXPECT_EQ(r.scenario->players.size(), 6u);
  EXPECT_EQ(r.scenario->network.arc_count(), sc.network.arc_count());
}
