#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynflow/model.hpp"
#include "json.hpp"

namespace dynflow {

using json = nlohmann::json;

struct Diagnostic {
  std::string path;  // JSON pointer into the document
  std::string message;

  std::string to_string() const { return (path.empty() ? "/" : path) + ": " + message; }
};

struct ScenarioResult {
  std::optional<Scenario> scenario;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return scenario.has_value() && diagnostics.empty(); }
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string summarize(const std::vector<Diagnostic>& ds) {
    std::string out = "invalid scenario";
    for (const auto& d : ds) out += "\n  " + d.to_string();
    return out;
  }
  std::vector<Diagnostic> diagnostics_;
};

namespace detail {

// Numbers may be JSON integers, decimal strings or "p/q" strings. Non-integer
// JSON numbers go through their shortest round-trip decimal form.
inline std::optional<Rational> read_rational(const json& v, const std::string& path, std::vector<Diagnostic>& diag) {
  try {
    if (v.is_string()) return Rational::parse(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number_float()) {
      char buf[64];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v.get<double>());
      if (ec == std::errc()) return Rational::parse(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
    }
  } catch (const std::exception& e) {
    diag.push_back({path, e.what()});
    return std::nullopt;
  }
  diag.push_back({path, "expected a number or a \"p/q\" string"});
  return std::nullopt;
}

inline std::optional<std::string> read_id(const json& v, const std::string& path, std::vector<Diagnostic>& diag) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  diag.push_back({path, "expected a string or integer id"});
  return std::nullopt;
}

inline const json* member(const json& obj, const char* key, const std::string& path, std::vector<Diagnostic>& diag) {
  if (!obj.is_object() || !obj.contains(key)) {
    diag.push_back({path + "/" + key, "missing field"});
    return nullptr;
  }
  return &obj.at(key);
}

inline std::optional<Path> read_path(const json& v, const Network& net, const std::string& path,
                                     std::vector<Diagnostic>& diag) {
  if (!v.is_array()) {
    diag.push_back({path, "expected an array of arc ids"});
    return std::nullopt;
  }
  Path p;
  bool ok = true;
  for (std::size_t k = 0; k < v.size(); ++k) {
    auto id = read_id(v[k], path + "/" + std::to_string(k), diag);
    if (!id) {
      ok = false;
    } else if (!net.has_arc(*id)) {
      diag.push_back({path + "/" + std::to_string(k), "unknown arc '" + *id + "'"});
      ok = false;
    } else {
      p.push_back(net.arc_by_id(*id));
    }
  }
  if (!ok) return std::nullopt;
  return p;
}

inline std::optional<SupplyRate> read_supply(const json& v, const std::string& path, std::vector<Diagnostic>& diag) {
  if (!v.is_array()) {
    diag.push_back({path, "expected an array of {start, end, rate}"});
    return std::nullopt;
  }
  SupplyRate s;
  const std::size_t before = diag.size();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string p = path + "/" + std::to_string(k);
    const json* start = member(v[k], "start", p, diag);
    const json* end = member(v[k], "end", p, diag);
    const json* rate = member(v[k], "rate", p, diag);
    if (!start || !end || !rate) continue;
    auto a = read_rational(*start, p + "/start", diag);
    auto b = read_rational(*end, p + "/end", diag);
    auto r = read_rational(*rate, p + "/rate", diag);
    if (!a || !b || !r) continue;
    if (a->sign() < 0) diag.push_back({p + "/start", "supply must start at a non-negative time"});
    if (!(*a < *b)) diag.push_back({p, "supply piece must have start < end"});
    if (r->sign() < 0) diag.push_back({p + "/rate", "supply rate must be non-negative"});
    if (!s.pieces.empty() && *a < s.pieces.back().end)
      diag.push_back({p, "supply pieces must be sorted and disjoint"});
    s.pieces.push_back({*a, *b, *r});
  }
  if (diag.size() != before) return std::nullopt;
  if (!(s.mass().sign() > 0)) {
    diag.push_back({path, "total supply must be positive"});
    return std::nullopt;
  }
  return s;
}

}  // namespace detail

// Parses and checks a scenario document. Every violated invariant yields one
// diagnostic; the scenario is only returned when there are none.
inline ScenarioResult validate_scenario(const json& doc) {
  using namespace detail;
  ScenarioResult result;
  auto& diag = result.diagnostics;
  Scenario sc;

  if (!doc.is_object()) {
    diag.push_back({"", "scenario must be a JSON object"});
    return result;
  }

  if (const json* nodes = member(doc, "nodes", "", diag)) {
    if (!nodes->is_array()) {
      diag.push_back({"/nodes", "expected an array"});
    } else {
      for (std::size_t k = 0; k < nodes->size(); ++k) {
        const std::string p = "/nodes/" + std::to_string(k);
        auto id = read_id((*nodes)[k], p, diag);
        if (!id) continue;
        if (sc.network.has_node(*id))
          diag.push_back({p, "duplicate node id '" + *id + "'"});
        else
          sc.network.add_node(*id);
      }
    }
  }

  if (const json* arcs = member(doc, "arcs", "", diag)) {
    if (!arcs->is_array()) {
      diag.push_back({"/arcs", "expected an array"});
    } else {
      for (std::size_t k = 0; k < arcs->size(); ++k) {
        const std::string p = "/arcs/" + std::to_string(k);
        const json& a = (*arcs)[k];
        const std::size_t before = diag.size();
        const json* idv = member(a, "id", p, diag);
        const json* fromv = member(a, "from", p, diag);
        const json* tov = member(a, "to", p, diag);
        const json* tauv = member(a, "transit_time", p, diag);
        const json* nuv = member(a, "capacity", p, diag);
        if (diag.size() != before) continue;
        auto id = read_id(*idv, p + "/id", diag);
        auto from = read_id(*fromv, p + "/from", diag);
        auto to = read_id(*tov, p + "/to", diag);
        auto tau = read_rational(*tauv, p + "/transit_time", diag);
        auto nu = read_rational(*nuv, p + "/capacity", diag);
        std::optional<int> priority;
        if (a.contains("merge_priority")) {
          if (a["merge_priority"].is_number_integer())
            priority = a["merge_priority"].get<int>();
          else
            diag.push_back({p + "/merge_priority", "expected an integer"});
        }
        if (from && !sc.network.has_node(*from)) diag.push_back({p + "/from", "unknown node '" + *from + "'"});
        if (to && !sc.network.has_node(*to)) diag.push_back({p + "/to", "unknown node '" + *to + "'"});
        if (tau && tau->sign() <= 0) diag.push_back({p + "/transit_time", "transit time must be positive"});
        if (nu && nu->sign() <= 0) diag.push_back({p + "/capacity", "capacity must be positive"});
        if (id && sc.network.has_arc(*id)) diag.push_back({p + "/id", "duplicate arc id '" + *id + "'"});
        if (diag.size() != before) continue;
        sc.network.add_arc(*id, *from, *to, *tau, *nu, priority);
      }
    }
  }

  if (doc.contains("discretization")) {
    const json& d = doc["discretization"];
    const json* a = member(d, "alpha", "/discretization", diag);
    const json* b = member(d, "beta", "/discretization", diag);
    if (a && b) {
      auto alpha = read_rational(*a, "/discretization/alpha", diag);
      auto beta = read_rational(*b, "/discretization/beta", diag);
      if (alpha && alpha->sign() <= 0) diag.push_back({"/discretization/alpha", "alpha must be positive"});
      if (beta && beta->sign() <= 0) diag.push_back({"/discretization/beta", "beta must be positive"});
      if (alpha && beta && alpha->sign() > 0 && beta->sign() > 0) sc.discretization = Discretization{*alpha, *beta};
    }
  }

  auto endpoints = [&](const json& obj, const std::string& p, NodeIndex& o, NodeIndex& dnode) {
    bool ok = true;
    for (auto [key, target] : {std::pair<const char*, NodeIndex*>{"origin", &o}, {"destination", &dnode}}) {
      const json* v = member(obj, key, p, diag);
      if (!v) {
        ok = false;
        continue;
      }
      auto id = read_id(*v, p + "/" + key, diag);
      if (!id) {
        ok = false;
      } else if (!sc.network.has_node(*id)) {
        diag.push_back({p + "/" + key, "unknown node '" + *id + "'"});
        ok = false;
      } else {
        *target = sc.network.node(*id);
      }
    }
    return ok;
  };

  std::set<std::string> source_ids;
  if (doc.contains("commodities")) {
    const json& cs = doc["commodities"];
    if (!cs.is_array()) diag.push_back({"/commodities", "expected an array"});
    for (std::size_t k = 0; cs.is_array() && k < cs.size(); ++k) {
      const std::string p = "/commodities/" + std::to_string(k);
      const json& c = cs[k];
      Commodity com;
      const std::size_t before = diag.size();
      if (const json* idv = member(c, "id", p, diag)) {
        if (auto id = read_id(*idv, p + "/id", diag)) {
          com.id = *id;
          if (!source_ids.insert(*id).second) diag.push_back({p + "/id", "duplicate commodity id '" + *id + "'"});
        }
      }
      const bool ends = endpoints(c, p, com.origin, com.destination);
      if (const json* pv = member(c, "path", p, diag)) {
        if (auto path = read_path(*pv, sc.network, p + "/path", diag)) {
          if (ends) {
            if (auto why = sc.network.check_path(*path, com.origin, com.destination); !why.empty())
              diag.push_back({p + "/path", why});
          }
          com.path = *path;
        }
      }
      if (const json* sv = member(c, "supply", p, diag))
        if (auto s = read_supply(*sv, p + "/supply", diag)) com.supply = *s;
      if (diag.size() == before) sc.commodities.push_back(std::move(com));
    }
  }

  if (doc.contains("players")) {
    const json& ps = doc["players"];
    if (!ps.is_array()) diag.push_back({"/players", "expected an array"});
    for (std::size_t k = 0; ps.is_array() && k < ps.size(); ++k) {
      const std::string p = "/players/" + std::to_string(k);
      const json& pl = ps[k];
      Player player;
      const std::size_t before = diag.size();
      if (const json* idv = member(pl, "id", p, diag)) {
        if (auto id = read_id(*idv, p + "/id", diag)) {
          player.id = *id;
          if (!source_ids.insert(*id).second) diag.push_back({p + "/id", "duplicate player id '" + *id + "'"});
        }
      }
      const bool ends = endpoints(pl, p, player.origin, player.destination);
      if (const json* rv = member(pl, "release", p, diag)) {
        if (auto r = read_rational(*rv, p + "/release", diag)) {
          player.release = *r;
          if (r->sign() < 0) {
            diag.push_back({p + "/release", "release time must be non-negative"});
          } else if (!sc.discretization) {
            diag.push_back({p + "/release", "players require a discretization"});
          } else if (floor_to_grid(*r, sc.discretization->alpha) != *r) {
            diag.push_back({p + "/release", "release time is not on the alpha grid"});
          }
        }
      }
      if (pl.contains("path")) {
        if (auto path = read_path(pl["path"], sc.network, p + "/path", diag)) {
          if (ends) {
            if (auto why = sc.network.check_path(*path, player.origin, player.destination); !why.empty())
              diag.push_back({p + "/path", why});
          }
          player.path = *path;
        }
      }
      if (diag.size() == before) sc.players.push_back(std::move(player));
    }
  }

  if (diag.empty()) result.scenario = std::move(sc);
  return result;
}

inline json to_json(const Scenario& sc) {
  const Network& net = sc.network;
  json doc;
  doc["nodes"] = net.nodes();
  json arcs = json::array();
  for (const auto& a : net.arcs())
    arcs.push_back({{"id", a.id},
                    {"from", net.node_id(a.tail)},
                    {"to", net.node_id(a.head)},
                    {"transit_time", a.transit_time.to_string()},
                    {"capacity", a.capacity.to_string()},
                    {"merge_priority", a.merge_priority}});
  doc["arcs"] = arcs;
  auto path_ids = [&](const Path& p) {
    json out = json::array();
    for (ArcIndex e : p) out.push_back(net.arc(e).id);
    return out;
  };
  json commodities = json::array();
  for (const auto& c : sc.commodities) {
    json supply = json::array();
    for (const auto& piece : c.supply.pieces)
      supply.push_back(
          {{"start", piece.start.to_string()}, {"end", piece.end.to_string()}, {"rate", piece.rate.to_string()}});
    commodities.push_back({{"id", c.id},
                           {"origin", net.node_id(c.origin)},
                           {"destination", net.node_id(c.destination)},
                           {"path", path_ids(c.path)},
                           {"supply", supply}});
  }
  doc["commodities"] = commodities;
  if (sc.discretization)
    doc["discretization"] = {{"alpha", sc.discretization->alpha.to_string()},
                             {"beta", sc.discretization->beta.to_string()}};
  if (!sc.players.empty()) {
    json players = json::array();
    for (const auto& p : sc.players) {
      json entry = {{"id", p.id},
                    {"origin", net.node_id(p.origin)},
                    {"destination", net.node_id(p.destination)},
                    {"release", p.release.to_string()}};
      if (p.path) entry["path"] = path_ids(*p.path);
      players.push_back(entry);
    }
    doc["players"] = players;
  }
  return doc;
}

inline Scenario parse_scenario(const json& doc) {
  auto result = validate_scenario(doc);
  if (!result.ok()) throw ScenarioError(std::move(result.diagnostics));
  return std::move(*result.scenario);
}

inline Scenario load_scenario_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw ScenarioError({{"", "cannot open '" + filename + "'"}});
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ScenarioError({{"", std::string("malformed JSON: ") + e.what()}});
  }
  return parse_scenario(doc);
}

}  // namespace dynflow
