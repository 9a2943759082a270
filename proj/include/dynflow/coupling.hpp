#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynflow/discrete_sim.hpp"
#include "dynflow/model.hpp"
#include "dynflow/piecewise.hpp"

namespace dynflow {

// Packets of one commodity: release time of packet i (1-based) is
// release_times[i - 1].
struct PacketSet {
  std::int64_t count = 0;
  std::vector<Rational> release_times;
};

// |N_j| = floor(m_j / beta) packets; packet i is released at the first grid
// point where the cumulative supply reaches i * beta.
inline PacketSet build_packets(const Commodity& c, const Discretization& d) {
  const PiecewiseLinear supplied = c.supply.as_step_function().cumulative();
  PacketSet set;
  set.count = (c.supply.mass() / d.beta).floor().get_si();
  set.release_times.reserve(static_cast<std::size_t>(set.count));
  for (std::int64_t i = 1; i <= set.count; ++i) {
    const auto last_particle = supplied.first_reach(Rational(i) * d.beta, Rational(0));
    if (!last_particle) throw InvariantViolation("supply does not cover packet " + std::to_string(i));
    set.release_times.push_back(ceil_to_grid(*last_particle, d.alpha));
  }
  return set;
}

// Packets of all commodities in global order.
inline std::vector<Packet> make_packets(const std::vector<Commodity>& commodities, const Discretization& d) {
  std::vector<Packet> packets;
  for (std::size_t j = 0; j < commodities.size(); ++j) {
    const PacketSet set = build_packets(commodities[j], d);
    for (std::int64_t i = 1; i <= set.count; ++i)
      packets.push_back({j, i, commodities[j].path,
                         (set.release_times[static_cast<std::size_t>(i - 1)] / d.alpha).to_int64()});
  }
  return packets;
}

// Packet counts per step of one commodity on one arc, turned into rates that
// are constant on ((t - 1) alpha, t alpha] and their exact integrals.
class StepCounts {
 public:
  void add(std::int64_t step) { ++counts_[step]; }
  const std::map<std::int64_t, std::int64_t>& counts() const { return counts_; }
  std::int64_t count_at(std::int64_t step) const {
    auto it = counts_.find(step);
    return it == counts_.end() ? 0 : it->second;
  }
  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& [s, c] : counts_) n += c;
    return n;
  }

  PiecewiseLinear cumulative(const Discretization& d) const {
    std::vector<PiecewiseLinear::Point> pts{{Rational(0), Rational(0)}};
    Rational acc(0);
    for (const auto& [step, count] : counts_) {
      const Rational begin = Rational(step - 1) * d.alpha;
      if (pts.back().first < begin) pts.emplace_back(begin, acc);
      acc += Rational(count) * d.beta;
      pts.emplace_back(Rational(step) * d.alpha, acc);
    }
    return PiecewiseLinear(std::move(pts));
  }

  StepFunction rate(const Discretization& d) const {
    std::vector<RatePiece> pieces;
    for (const auto& [step, count] : counts_)
      pieces.push_back({Rational(step - 1) * d.alpha, Rational(step) * d.alpha, Rational(count) * d.beta / d.alpha});
    return StepFunction::from_pieces(pieces);
  }

 private:
  std::map<std::int64_t, std::int64_t> counts_;
};

// g and G functions of the packet model per (arc, commodity).
class DiscreteFlowFunctions {
 public:
  DiscreteFlowFunctions(std::size_t arcs, std::size_t commodities, Discretization d)
      : d_(std::move(d)), commodities_(commodities), in_(arcs * commodities), out_(arcs * commodities),
        in_cum_(arcs * commodities), out_cum_(arcs * commodities) {}

  const Discretization& discretization() const { return d_; }
  std::size_t commodity_count() const { return commodities_; }
  std::size_t arc_count() const { return commodities_ ? in_.size() / commodities_ : 0; }

  const StepCounts& entering(ArcIndex e, std::size_t j) const { return in_.at(slot(e, j)); }
  const StepCounts& leaving(ArcIndex e, std::size_t j) const { return out_.at(slot(e, j)); }
  const PiecewiseLinear& cumulative_inflow(ArcIndex e, std::size_t j) const { return in_cum_.at(slot(e, j)); }
  const PiecewiseLinear& cumulative_outflow(ArcIndex e, std::size_t j) const { return out_cum_.at(slot(e, j)); }

  // g(theta) := g(ceil_alpha(theta)), i.e. the rate of the step containing
  // theta in ((t - 1) alpha, t alpha].
  Rational inflow_rate(ArcIndex e, std::size_t j, const Rational& theta) const {
    return rate_of(entering(e, j), theta);
  }
  Rational outflow_rate(ArcIndex e, std::size_t j, const Rational& theta) const {
    return rate_of(leaving(e, j), theta);
  }

  PiecewiseLinear total_cumulative_inflow(ArcIndex e) const {
    PiecewiseLinear sum;
    for (std::size_t j = 0; j < commodities_; ++j) sum = sum + cumulative_inflow(e, j);
    return sum;
  }

  void record_entry(ArcIndex e, std::size_t j, std::int64_t step) { in_.at(slot(e, j)).add(step); }
  void record_exit(ArcIndex e, std::size_t j, std::int64_t step) { out_.at(slot(e, j)).add(step); }
  void finalize() {
    for (std::size_t k = 0; k < in_.size(); ++k) {
      in_cum_[k] = in_[k].cumulative(d_);
      out_cum_[k] = out_[k].cumulative(d_);
    }
  }

 private:
  std::size_t slot(ArcIndex e, std::size_t j) const {
    if (j >= commodities_) throw std::out_of_range("commodity index out of range");
    return e * commodities_ + j;
  }
  Rational rate_of(const StepCounts& counts, const Rational& theta) const {
    const std::int64_t step = (ceil_to_grid(theta, d_.alpha) / d_.alpha).to_int64();
    return Rational(counts.count_at(step)) * d_.beta / d_.alpha;
  }

  Discretization d_;
  std::size_t commodities_;
  std::vector<StepCounts> in_, out_;
  std::vector<PiecewiseLinear> in_cum_, out_cum_;
};

// Builds g/G per (arc, commodity) from a completed event log. Packets must
// enter their first arc at step >= 1, which holds for packets built from
// supply rates.
inline DiscreteFlowFunctions extract_rates(std::size_t arc_count, std::size_t commodity_count,
                                           const std::vector<Packet>& packets, const EventLog& log,
                                           const Discretization& d) {
  DiscreteFlowFunctions f(arc_count, commodity_count, d);
  for (const Event& ev : log.events) {
    if (ev.kind != EventKind::enter && ev.kind != EventKind::leave) continue;
    if (ev.step < 1) throw std::invalid_argument("refined times need all arc entries at step >= 1");
    const std::size_t j = packets.at(ev.packet).source;
    if (ev.kind == EventKind::enter)
      f.record_entry(ev.location, j, ev.step);
    else
      f.record_exit(ev.location, j, ev.step);
  }
  f.finalize();
  return f;
}

// min { theta : G(theta) >= i beta }, with G = G+ of the outgoing arc at the
// origin and G- of the incoming arc elsewhere.
inline Rational refined_arrival(const DiscreteFlowFunctions& f, const Commodity& c, std::size_t j, std::int64_t i,
                                std::size_t node_pos) {
  if (node_pos > c.path.size()) throw std::out_of_range("node position beyond the end of the path");
  const PiecewiseLinear& G =
      node_pos == 0 ? f.cumulative_inflow(c.path.front(), j) : f.cumulative_outflow(c.path[node_pos - 1], j);
  const Rational volume = Rational(i) * f.discretization().beta;
  if (i < 1 || G.final_value() < volume) throw std::out_of_range("packet " + std::to_string(i) + " out of range");
  return *G.first_reach(volume, Rational(0));
}

// Same time read from the cumulative inflow of the arc leaving the node.
inline Rational refined_entrance(const DiscreteFlowFunctions& f, const Commodity& c, std::size_t j, std::int64_t i,
                                 std::size_t node_pos) {
  if (node_pos >= c.path.size()) throw std::out_of_range("no arc leaves the destination");
  const PiecewiseLinear& G = f.cumulative_inflow(c.path[node_pos], j);
  const Rational volume = Rational(i) * f.discretization().beta;
  if (i < 1 || G.final_value() < volume) throw std::out_of_range("packet " + std::to_string(i) + " out of range");
  return *G.first_reach(volume, Rational(0));
}

// Position of a packet among the packets of its commodity handled in the
// same step, from its refined time and the step's rate.
inline std::int64_t position_in_step(const Rational& refined, const Rational& rate, const Discretization& d) {
  const Rational step_start = ceil_to_grid(refined, d.alpha) - d.alpha;
  const Rational k = (refined - step_start) / d.alpha * rate * d.alpha / d.beta;
  if (!k.is_integer() || k.sign() <= 0)
    throw InvariantViolation("refined time " + refined.to_string() + " gives non-integer position " + k.to_string());
  return k.to_int64();
}

// Queue sizes, waiting times and exit times of the packet model on one arc.
class DiscreteQueueStats {
 public:
  DiscreteQueueStats(const DiscreteFlowFunctions& f, ArcIndex e, const Rational& transit_time)
      : f_(&f), arc_(e), rounded_transit_(ceil_to_grid(transit_time, f.discretization().alpha)) {}

  const Rational& rounded_transit() const { return rounded_transit_; }

  // z_j(x) = G+_j(x - ceil(tau)) - G-_j(x)
  Rational queue_size(std::size_t j, const Rational& x) const {
    const Rational entered = x < rounded_transit_ ? Rational(0) : f_->cumulative_inflow(arc_, j).at(x - rounded_transit_);
    return entered - f_->cumulative_outflow(arc_, j).at(x);
  }

  Rational total_queue_size(const Rational& x) const {
    Rational sum(0);
    for (std::size_t j = 0; j < f_->commodity_count(); ++j) sum += queue_size(j, x);
    return sum;
  }

  // Smallest q >= 0 such that the outflow of j over
  // (theta + ceil(tau), theta + ceil(tau) + q] covers z_j(theta + ceil(tau)).
  Rational waiting_time(std::size_t j, const Rational& theta) const {
    const Rational s = theta + rounded_transit_;
    const Rational z = queue_size(j, s);
    if (z.sign() <= 0) return Rational(0);
    const PiecewiseLinear& out = f_->cumulative_outflow(arc_, j);
    const auto done = out.first_reach(out.at(s) + z, s);
    if (!done) throw InvariantViolation("queued packets never leave arc " + std::to_string(arc_));
    return *done - s;
  }

  Rational exit_time(std::size_t j, const Rational& theta) const {
    return theta + rounded_transit_ + waiting_time(j, theta);
  }

 private:
  const DiscreteFlowFunctions* f_;
  ArcIndex arc_;
  Rational rounded_transit_;
};

struct RefinedTime {
  std::size_t commodity = 0;
  std::int64_t packet = 0;
  std::size_t node_pos = 0;
  NodeIndex node = 0;
  Rational refined_time;
  std::int64_t step = 0;
  std::int64_t position = 0;
};

// Refined time, processing step and in-step position of every packet at
// every node of its path.
inline std::vector<RefinedTime> refined_times(const Network& net, const std::vector<Commodity>& commodities,
                                              const DiscreteFlowFunctions& f) {
  const Discretization& d = f.discretization();
  std::vector<RefinedTime> out;
  for (std::size_t j = 0; j < commodities.size(); ++j) {
    const Commodity& c = commodities[j];
    const std::int64_t count = f.entering(c.path.front(), j).total();
    for (std::size_t p = 0; p <= c.path.size(); ++p) {
      const NodeIndex v = p == 0 ? c.origin : net.arc(c.path[p - 1]).head;
      for (std::int64_t i = 1; i <= count; ++i) {
        const Rational t = refined_arrival(f, c, j, i, p);
        const Rational rate = p < c.path.size() ? f.inflow_rate(c.path[p], j, t) : f.outflow_rate(c.path[p - 1], j, t);
        out.push_back({j, i, p, v, t, (ceil_to_grid(t, d.alpha) / d.alpha).to_int64(), position_in_step(t, rate, d)});
      }
    }
  }
  return out;
}

struct ExitIdentityFailure {
  std::size_t commodity;
  std::int64_t packet;
  ArcIndex arc;
  Rational refined_exit;
  Rational exit_time;
};

// Checks refined_arrival at the head of every arc against the discrete exit
// time applied to the refined arrival at its tail, for every packet.
inline std::vector<ExitIdentityFailure> check_exit_identity(const Network& net,
                                                            const std::vector<Commodity>& commodities,
                                                            const DiscreteFlowFunctions& f,
                                                            std::size_t* checked = nullptr) {
  std::vector<ExitIdentityFailure> failures;
  std::size_t n = 0;
  for (std::size_t j = 0; j < commodities.size(); ++j) {
    const Commodity& c = commodities[j];
    const std::int64_t count = f.entering(c.path.front(), j).total();
    for (std::size_t h = 0; h < c.path.size(); ++h) {
      const ArcIndex e = c.path[h];
      const DiscreteQueueStats stats(f, e, net.arc(e).transit_time);
      for (std::int64_t i = 1; i <= count; ++i) {
        const Rational at_tail = refined_arrival(f, c, j, i, h);
        const Rational at_head = refined_arrival(f, c, j, i, h + 1);
        const Rational predicted = stats.exit_time(j, at_tail);
        ++n;
        if (predicted != at_head) failures.push_back({j, i, e, at_head, predicted});
      }
    }
  }
  if (checked) *checked = n;
  return failures;
}

}  // namespace dynflow
