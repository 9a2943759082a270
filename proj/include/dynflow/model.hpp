#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynflow/piecewise.hpp"
#include "dynflow/rational.hpp"

namespace dynflow {

using ArcIndex = std::size_t;
using NodeIndex = std::size_t;
using Path = std::vector<ArcIndex>;

struct Arc {
  std::string id;
  NodeIndex tail = 0;
  NodeIndex head = 0;
  Rational transit_time;  // seconds, > 0
  Rational capacity;      // volume per second, > 0
  int merge_priority = 0;  // lower wins merge ties
};

// Directed multigraph with string ids. Arc and node indices are positions in
// the insertion order and stay fixed for the lifetime of the network.
class Network {
 public:
  NodeIndex add_node(const std::string& id) {
    if (node_index_.count(id)) throw std::invalid_argument("duplicate node id '" + id + "'");
    node_index_.emplace(id, nodes_.size());
    nodes_.push_back(id);
    in_.emplace_back();
    out_.emplace_back();
    return nodes_.size() - 1;
  }

  ArcIndex add_arc(const std::string& id, const std::string& from, const std::string& to, Rational transit_time,
                   Rational capacity, std::optional<int> merge_priority = std::nullopt) {
    if (arc_index_.count(id)) throw std::invalid_argument("duplicate arc id '" + id + "'");
    Arc a{id, node(from), node(to), std::move(transit_time), std::move(capacity),
          merge_priority.value_or(static_cast<int>(arcs_.size()))};
    arc_index_.emplace(id, arcs_.size());
    out_[a.tail].push_back(arcs_.size());
    in_[a.head].push_back(arcs_.size());
    arcs_.push_back(std::move(a));
    return arcs_.size() - 1;
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t arc_count() const { return arcs_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const Arc& arc(ArcIndex e) const { return arcs_.at(e); }
  const std::string& node_id(NodeIndex v) const { return nodes_.at(v); }
  const std::vector<ArcIndex>& in_arcs(NodeIndex v) const { return in_.at(v); }
  const std::vector<ArcIndex>& out_arcs(NodeIndex v) const { return out_.at(v); }

  bool has_node(const std::string& id) const { return node_index_.count(id) > 0; }
  bool has_arc(const std::string& id) const { return arc_index_.count(id) > 0; }
  NodeIndex node(const std::string& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw std::out_of_range("unknown node '" + id + "'");
    return it->second;
  }
  ArcIndex arc_by_id(const std::string& id) const {
    auto it = arc_index_.find(id);
    if (it == arc_index_.end()) throw std::out_of_range("unknown arc '" + id + "'");
    return it->second;
  }

  Rational min_transit_time() const {
    if (arcs_.empty()) throw std::logic_error("network has no arcs");
    Rational m = arcs_.front().transit_time;
    for (const auto& a : arcs_) m = std::min(m, a.transit_time);
    return m;
  }

  // Empty string when the path is a simple directed path from `from` to `to`,
  // otherwise a reason.
  std::string check_path(const Path& path, NodeIndex from, NodeIndex to) const {
    if (path.empty()) return "path is empty";
    std::vector<bool> seen(nodes_.size(), false);
    NodeIndex at = from;
    seen[at] = true;
    for (ArcIndex e : path) {
      if (e >= arcs_.size()) return "path references an unknown arc";
      if (arcs_[e].tail != at) return "path is not connected at arc '" + arcs_[e].id + "'";
      at = arcs_[e].head;
      if (seen[at]) return "path not simple";
      seen[at] = true;
    }
    if (at != to) return "path does not end at the destination";
    return {};
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<ArcIndex>> in_, out_;
  std::map<std::string, NodeIndex> node_index_;
  std::map<std::string, ArcIndex> arc_index_;
};

// Piecewise-constant supply rate with rational breakpoints.
struct SupplyRate {
  std::vector<RatePiece> pieces;

  StepFunction as_step_function() const { return StepFunction::from_pieces(pieces); }
  Rational mass() const { return as_step_function().total(); }
  Rational max_rate() const { return as_step_function().max_value(); }
  Rational last_breakpoint() const { return pieces.empty() ? Rational(0) : pieces.back().end; }
};

struct Commodity {
  std::string id;
  NodeIndex origin = 0;
  NodeIndex destination = 0;
  Path path;
  SupplyRate supply;
};

// A single packet-sized player of the routing game.
struct Player {
  std::string id;
  NodeIndex origin = 0;
  NodeIndex destination = 0;
  Rational release;  // on the alpha grid
  std::optional<Path> path;  // current strategy, if given
};

struct Discretization {
  Rational alpha;  // time step length
  Rational beta;   // packet volume
};

struct DiscretizedArc {
  ArcIndex arc = 0;
  std::int64_t steps = 0;      // transit time in steps
  Rational packets_per_step;  // may be fractional
};

inline void require_grid_args(const Rational& x, const Rational& step) {
  if (x.sign() < 0) throw std::invalid_argument("grid rounding of a negative value");
  if (step.sign() <= 0) throw std::invalid_argument("grid step must be positive");
}

// max { k * step <= x }
inline Rational floor_to_grid(const Rational& x, const Rational& step) {
  require_grid_args(x, step);
  return from_integer((x / step).floor()) * step;
}

// min { k * step >= x }
inline Rational ceil_to_grid(const Rational& x, const Rational& step) {
  require_grid_args(x, step);
  return from_integer((x / step).ceil()) * step;
}

inline DiscretizedArc discretize_arc(const Network& net, ArcIndex e, const Discretization& d) {
  const Arc& a = net.arc(e);
  return {e, (ceil_to_grid(a.transit_time, d.alpha) / d.alpha).to_int64(), a.capacity * d.alpha / d.beta};
}

inline std::vector<DiscretizedArc> discretize(const Network& net, const Discretization& d) {
  if (d.alpha.sign() <= 0 || d.beta.sign() <= 0) throw std::invalid_argument("alpha and beta must be positive");
  std::vector<DiscretizedArc> out;
  out.reserve(net.arc_count());
  for (ArcIndex e = 0; e < net.arc_count(); ++e) out.push_back(discretize_arc(net, e, d));
  return out;
}

// Human-readable notes when the convergence preconditions are not met
// (beta/alpha < 1 and at least two packets per step on every arc).
inline std::vector<std::string> discretization_warnings(const Network& net, const Discretization& d) {
  std::vector<std::string> out;
  if (!(d.beta / d.alpha < Rational(1))) out.push_back("beta/alpha >= 1");
  for (const auto& da : discretize(net, d))
    if (da.packets_per_step < Rational(2))
      out.push_back("arc '" + net.arc(da.arc).id + "' lets fewer than 2 packets leave per step");
  return out;
}

// kappa_e = max { sum over arcs into tail(e) of (nu + 1), nu_e + 1 }, where
// every commodity released at tail(e) counts as an extra incoming arc whose
// capacity is the commodity's peak supply rate.
inline Rational rate_bound(const Network& net, const std::vector<Commodity>& commodities, ArcIndex e) {
  const Arc& a = net.arc(e);
  Rational incoming(0);
  for (ArcIndex in : net.in_arcs(a.tail)) incoming += net.arc(in).capacity + Rational(1);
  for (const auto& c : commodities)
    if (c.origin == a.tail) incoming += c.supply.max_rate() + Rational(1);
  return std::max(incoming, a.capacity + Rational(1));
}

struct Scenario {
  Network network;
  std::vector<Commodity> commodities;
  std::optional<Discretization> discretization;
  std::vector<Player> players;
};

}  // namespace dynflow
