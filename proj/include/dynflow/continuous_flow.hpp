#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynflow/discrete_sim.hpp"
#include "dynflow/model.hpp"
#include "dynflow/piecewise.hpp"

namespace dynflow {

// Deterministic-queue dynamics of one arc for a given total inflow rate.
struct ArcDynamics {
  Rational transit_time;
  Rational capacity;
  StepFunction outflow;
  PiecewiseLinear queue;      // z(theta) = F+(theta - tau) - F-(theta)
  PiecewiseLinear exit_time;  // T(theta) = theta + tau + z(theta + tau) / nu

  Rational waiting_time(const Rational& theta) const { return exit_time.at(theta) - theta - transit_time; }
};

inline std::vector<Rational> merged_points(std::vector<Rational> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Outflow at capacity while the queue is positive, otherwise min(inflow
// shifted by tau, capacity). Queue-depletion times are exact roots of the
// linear queue pieces.
inline ArcDynamics arc_outflow(const StepFunction& inflow, const Rational& transit_time, const Rational& capacity) {
  if (transit_time.sign() <= 0 || capacity.sign() <= 0)
    throw std::invalid_argument("arc needs positive transit time and capacity");
  const StepFunction shifted = inflow.shifted(transit_time);
  std::vector<RatePiece> out;
  std::vector<PiecewiseLinear::Point> zpts{{Rational(0), Rational(0)}};
  Rational z(0);
  Rational theta = shifted.support_start();
  if (theta.sign() < 0) throw std::domain_error("inflow before time zero");
  if (theta.sign() > 0) zpts.emplace_back(theta, Rational(0));

  auto emit = [&](const Rational& from, const Rational& to, const Rational& rate) {
    if (rate.sign() > 0) out.push_back({from, to, rate});
    zpts.emplace_back(to, z);
  };

  auto advance = [&](const Rational& end, const Rational& rate) {
    while (theta < end) {
      if (z.sign() > 0 || rate > capacity) {
        if (!(rate < capacity)) {
          z += (rate - capacity) * (end - theta);
          emit(theta, end, capacity);
          theta = end;
        } else {
          const Rational drained = theta + z / (capacity - rate);
          if (!(drained < end)) {
            z -= (capacity - rate) * (end - theta);
            emit(theta, end, capacity);
            theta = end;
          } else {
            z = Rational(0);
            emit(theta, drained, capacity);
            theta = drained;
          }
        }
      } else {
        emit(theta, end, rate);
        theta = end;
      }
    }
  };

  for (std::size_t k = 0; k < shifted.piece_count(); ++k) {
    const RatePiece p = shifted.piece(k);
    advance(p.end, p.rate);
  }
  if (z.sign() > 0) advance(theta + z / capacity, Rational(0));

  ArcDynamics dyn{transit_time, capacity, StepFunction::from_pieces(out), PiecewiseLinear(zpts), {}};
  std::vector<PiecewiseLinear::Point> tpts{{Rational(0), transit_time}};
  for (const auto& [x, zx] : dyn.queue.points())
    if (transit_time < x) tpts.emplace_back(x - transit_time, x + zx / capacity);
  dyn.exit_time = PiecewiseLinear(std::move(tpts), Rational(1));
  return dyn;
}

// Per-commodity outflow rates: the total outflow at theta is shared in the
// proportions of the inflow at the minimal entrance time vartheta with
// T(vartheta) = theta.
inline std::vector<StepFunction> commodity_split(const StepFunction& total_outflow,
                                                 const std::vector<StepFunction>& inflows,
                                                 const PiecewiseLinear& exit_time) {
  StepFunction total_in;
  for (const auto& f : inflows) total_in = total_in + f;
  std::vector<Rational> pts = total_outflow.breakpoints();
  for (const auto& f : inflows)
    for (const auto& b : f.breakpoints()) pts.push_back(exit_time.at(b));
  pts = merged_points(std::move(pts));

  std::vector<std::vector<RatePiece>> pieces(inflows.size());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const Rational mid = (pts[k] + pts[k + 1]) / Rational(2);
    const Rational out = total_outflow.at(mid);
    if (out.sign() == 0) continue;
    const auto entry = exit_time.first_reach(mid);
    if (!entry) throw InvariantViolation("outflow without a matching entrance time");
    const Rational in = total_in.at(*entry);
    if (in.sign() == 0) continue;
    for (std::size_t j = 0; j < inflows.size(); ++j) {
      const Rational share = inflows[j].at(*entry);
      if (share.sign() > 0) pieces[j].push_back({pts[k], pts[k + 1], out * share / in});
    }
  }
  std::vector<StepFunction> result;
  result.reserve(inflows.size());
  for (const auto& p : pieces) result.push_back(StepFunction::from_pieces(p));
  return result;
}

struct ArcFlow {
  std::vector<StepFunction> inflow;   // per commodity, zero if unused
  std::vector<StepFunction> outflow;  // per commodity
  StepFunction total_inflow;
  ArcDynamics dynamics;
};

// Feasible flow over time for fixed paths. Commodity k of `commodities`
// corresponds to index k of every per-commodity vector.
struct FlowOverTime {
  std::vector<Commodity> commodities;
  std::vector<ArcFlow> arcs;
  std::size_t slabs = 0;

  PiecewiseLinear cumulative_inflow(ArcIndex e, std::size_t j) const { return arcs.at(e).inflow.at(j).cumulative(); }
  PiecewiseLinear cumulative_outflow(ArcIndex e, std::size_t j) const {
    return arcs.at(e).outflow.at(j).cumulative();
  }

  // Particle phi of commodity j reaches the node at position `node_pos` of
  // its path (0 = origin) at this time.
  Rational arrival_time(std::size_t j, const Rational& phi, std::size_t node_pos) const {
    const Commodity& c = commodities.at(j);
    if (node_pos > c.path.size()) throw std::out_of_range("node position beyond the end of the path");
    const Rational mass = c.supply.mass();
    if (phi.sign() < 0 || mass < phi) throw std::out_of_range("particle " + phi.to_string() + " outside [0, m_j]");
    auto source = c.supply.as_step_function().cumulative().first_reach(phi, Rational(0));
    if (!source) throw InvariantViolation("supply never reaches particle");
    Rational theta = *source;
    for (std::size_t h = 0; h < node_pos; ++h) theta = arcs.at(c.path[h]).dynamics.exit_time.at(theta);
    return theta;
  }
};

struct LoadingOptions {
  std::optional<Rational> horizon_cap;
};

inline Rational default_horizon_cap(const Network& net, const std::vector<Commodity>& commodities) {
  Rational supply_end(0), mass(0), transit(0);
  for (const auto& c : commodities) {
    supply_end = std::max(supply_end, c.supply.last_breakpoint());
    mass += c.supply.mass();
  }
  Rational min_capacity = net.arc_count() ? net.arc(0).capacity : Rational(1);
  for (const auto& a : net.arcs()) {
    transit += a.transit_time;
    min_capacity = std::min(min_capacity, a.capacity);
  }
  return Rational(2) * (supply_end + mass / min_capacity + transit);
}

// Network loading in slabs of length tau_min: inflow known on [0, K) fixes
// every arc's outflow on [0, K + tau_e), hence every inflow on [0, K + tau_min).
inline FlowOverTime load_network(const Network& net, const std::vector<Commodity>& commodities,
                                 const LoadingOptions& options = {}) {
  const std::size_t nj = commodities.size();
  FlowOverTime flow;
  flow.commodities = commodities;
  flow.arcs.resize(net.arc_count());
  for (auto& a : flow.arcs) {
    a.inflow.assign(nj, StepFunction());
    a.outflow.assign(nj, StepFunction());
  }
  for (ArcIndex e = 0; e < net.arc_count(); ++e)
    flow.arcs[e].dynamics = arc_outflow(StepFunction(), net.arc(e).transit_time, net.arc(e).capacity);
  if (net.arc_count() == 0) return flow;

  struct Use {
    std::size_t commodity;
    std::size_t hop;
  };
  std::vector<std::vector<Use>> users(net.arc_count());
  Rational supply_end(0), total_mass(0);
  for (std::size_t j = 0; j < nj; ++j) {
    for (std::size_t h = 0; h < commodities[j].path.size(); ++h) users[commodities[j].path[h]].push_back({j, h});
    supply_end = std::max(supply_end, commodities[j].supply.last_breakpoint());
    total_mass += commodities[j].supply.mass();
  }
  std::vector<StepFunction> supply;
  for (const auto& c : commodities) supply.push_back(c.supply.as_step_function());

  const Rational slab = net.min_transit_time();
  const Rational cap = options.horizon_cap.value_or(default_horizon_cap(net, commodities));

  auto inflow_of = [&](const std::vector<ArcFlow>& state, std::size_t j, std::size_t hop) -> const StepFunction& {
    return hop == 0 ? supply[j] : state[commodities[j].path[hop - 1]].outflow[j];
  };

  auto compute = [&](const std::vector<ArcFlow>& prev, const std::optional<Rational>& frontier) {
    std::vector<ArcFlow> next(net.arc_count());
    for (ArcIndex e = 0; e < net.arc_count(); ++e) {
      ArcFlow& a = next[e];
      a.inflow.assign(nj, StepFunction());
      for (const auto& u : users[e]) {
        const StepFunction& src = inflow_of(prev, u.commodity, u.hop);
        a.inflow[u.commodity] = frontier ? src.truncated(*frontier) : src;
        a.total_inflow = a.total_inflow + a.inflow[u.commodity];
      }
      a.dynamics = arc_outflow(a.total_inflow, net.arc(e).transit_time, net.arc(e).capacity);
      a.outflow = commodity_split(a.dynamics.outflow, a.inflow, a.dynamics.exit_time);
      if (frontier)
        for (auto& f : a.outflow) f = f.truncated(*frontier + net.arc(e).transit_time);
    }
    return next;
  };

  auto delivered = [&](const std::vector<ArcFlow>& state) {
    Rational sum(0);
    for (std::size_t j = 0; j < nj; ++j)
      if (!commodities[j].path.empty()) sum += state[commodities[j].path.back()].outflow[j].total();
    return sum;
  };

  std::vector<ArcFlow> state = flow.arcs;
  Rational frontier(0);
  std::size_t slabs = 0;
  while (true) {
    frontier += slab;
    ++slabs;
    if (cap < frontier)
      throw NonTerminationError("flow loading frontier exceeded the horizon cap " + cap.to_string());
    state = compute(state, frontier);
    if (!(frontier < supply_end) && delivered(state) == total_mass) break;
  }
  flow.arcs = compute(state, std::nullopt);
  for (ArcIndex e = 0; e < net.arc_count(); ++e)
    for (std::size_t j = 0; j < nj; ++j)
      if (!(flow.arcs[e].outflow[j] == state[e].outflow[j]))
        throw InvariantViolation("flow loading did not settle on arc '" + net.arc(e).id + "'");
  flow.slabs = slabs;
  return flow;
}

// Independent re-check of a loaded flow: queue non-negativity, the outflow
// rule, proportional commodity shares, conservation along every path, and
// the FIFO mass identity F-_j(T(theta)) = F+_j(theta). Empty when feasible.
inline std::vector<std::string> verify_flow(const Network& net, const FlowOverTime& flow) {
  std::vector<std::string> problems;
  const std::size_t nj = flow.commodities.size();
  for (ArcIndex e = 0; e < net.arc_count(); ++e) {
    const Arc& arc = net.arc(e);
    const ArcFlow& a = flow.arcs[e];
    const std::string where = "arc '" + arc.id + "': ";
    StepFunction in_sum, out_sum;
    for (std::size_t j = 0; j < nj; ++j) {
      in_sum = in_sum + a.inflow[j];
      out_sum = out_sum + a.outflow[j];
    }
    if (!(in_sum == a.total_inflow)) problems.push_back(where + "commodity inflows do not sum to the total");
    if (!(out_sum == a.dynamics.outflow)) problems.push_back(where + "commodity outflows do not sum to the total");
    if (in_sum.total() != out_sum.total()) problems.push_back(where + "mass entering differs from mass leaving");

    // Queue rebuilt from the cumulative functions.
    const PiecewiseLinear fin = in_sum.cumulative();
    const PiecewiseLinear fout = out_sum.cumulative();
    std::vector<PiecewiseLinear::Point> shifted{{Rational(0), Rational(0)}};
    for (const auto& [t, v] : fin.points()) shifted.emplace_back(t + arc.transit_time, v);
    const PiecewiseLinear z = PiecewiseLinear(shifted) - fout;
    for (const auto& [t, v] : z.points())
      if (v.sign() < 0) problems.push_back(where + "negative queue at " + t.to_string());

    std::vector<Rational> pts = z.breakpoints();
    for (const auto& b : out_sum.breakpoints()) pts.push_back(b);
    for (const auto& b : in_sum.breakpoints()) pts.push_back(b + arc.transit_time);
    pts = merged_points(std::move(pts));
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const Rational mid = (pts[k] + pts[k + 1]) / Rational(2);
      const Rational expected =
          z.at(mid).sign() > 0 ? arc.capacity : std::min(in_sum.at(mid - arc.transit_time), arc.capacity);
      if (out_sum.at(mid) != expected)
        problems.push_back(where + "outflow rule violated near " + mid.to_string());
    }

    std::vector<PiecewiseLinear::Point> tpts;
    for (const auto& [x, zx] : z.points())
      if (!(x < arc.transit_time)) tpts.emplace_back(x - arc.transit_time, x + zx / arc.capacity);
    if (tpts.empty() || tpts.front().first.sign() != 0) tpts.insert(tpts.begin(), {Rational(0), arc.transit_time});
    const PiecewiseLinear exit_time(tpts, Rational(1));
    for (std::size_t k = 1; k < tpts.size(); ++k)
      if (tpts[k].second < tpts[k - 1].second) problems.push_back(where + "exit time decreases");

    std::vector<Rational> spts = out_sum.breakpoints();
    for (std::size_t j = 0; j < nj; ++j)
      for (const auto& b : a.inflow[j].breakpoints()) spts.push_back(exit_time.at(b));
    spts = merged_points(std::move(spts));
    for (std::size_t k = 0; k + 1 < spts.size(); ++k) {
      const Rational mid = (spts[k] + spts[k + 1]) / Rational(2);
      const auto entry = exit_time.first_reach(mid);
      const Rational total_in = entry ? in_sum.at(*entry) : Rational(0);
      for (std::size_t j = 0; j < nj; ++j) {
        const Rational expected =
            total_in.sign() > 0 ? out_sum.at(mid) * a.inflow[j].at(*entry) / total_in : Rational(0);
        if (a.outflow[j].at(mid) != expected)
          problems.push_back(where + "commodity share violated near " + mid.to_string());
      }
    }

    for (std::size_t j = 0; j < nj; ++j) {
      const PiecewiseLinear cin = a.inflow[j].cumulative();
      const PiecewiseLinear cout = a.outflow[j].cumulative();
      for (const auto& [t, v] : cin.points())
        if (cout.at(exit_time.at(t)) != v)
          problems.push_back(where + "FIFO mass identity fails for commodity " + std::to_string(j) + " at " +
                             t.to_string());
    }
  }

  for (std::size_t j = 0; j < nj; ++j) {
    const Commodity& c = flow.commodities[j];
    const std::string who = "commodity '" + c.id + "': ";
    std::vector<bool> on_path(net.arc_count(), false);
    for (ArcIndex e : c.path) on_path[e] = true;
    for (ArcIndex e = 0; e < net.arc_count(); ++e)
      if (!on_path[e] && (!flow.arcs[e].inflow[j].is_zero() || !flow.arcs[e].outflow[j].is_zero()))
        problems.push_back(who + "flow on arc '" + net.arc(e).id + "' off its path");
    if (c.path.empty()) continue;
    if (!(flow.arcs[c.path.front()].inflow[j] == c.supply.as_step_function()))
      problems.push_back(who + "inflow at the origin differs from the supply");
    for (std::size_t h = 0; h + 1 < c.path.size(); ++h)
      if (!(flow.arcs[c.path[h + 1]].inflow[j] == flow.arcs[c.path[h]].outflow[j]))
        problems.push_back(who + "conservation violated at node '" + net.node_id(net.arc(c.path[h]).head) + "'");
  }
  return problems;
}

}  // namespace dynflow
