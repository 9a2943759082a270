#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynflow/continuous_flow.hpp"
#include "dynflow/coupling.hpp"
#include "dynflow/discrete_sim.hpp"
#include "dynflow/model.hpp"

namespace dynflow {

// Best rational approximation of x with denominator at most max_den
// (continued fractions with semiconvergents).
inline Rational best_rational(double x, long max_den) {
  if (!(x >= 0) || max_den < 1) throw std::invalid_argument("best_rational needs x >= 0 and max_den >= 1");
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_d = std::floor(r);
    if (a_d > 1e15) break;
    const long a = static_cast<long>(a_d);
    const long q2 = q0 + a * q1;
    if (q2 > max_den) {
      const long k = (max_den - q0) / q1;
      const long ps = p0 + k * p1, qs = q0 + k * q1;
      const double err_semi = std::abs(x - static_cast<double>(ps) / static_cast<double>(qs));
      const double err_conv = std::abs(x - static_cast<double>(p1) / static_cast<double>(q1));
      return err_semi < err_conv ? Rational(ps, qs) : Rational(p1, q1);
    }
    const long p2 = p0 + a * p1;
    p0 = p1, q0 = q1, p1 = p2, q1 = q2;
    const double frac = r - a_d;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return Rational(p1, q1);
}

// beta = alpha^(3/2); exact when alpha is a rational square, otherwise the
// nearest rational with denominator <= max_den.
inline Rational snapped_beta(const Rational& alpha, long max_den = 1024) {
  if (alpha.sign() <= 0) throw std::invalid_argument("alpha must be positive");
  const mpz_class n = alpha.num(), d = alpha.den();
  if (mpz_perfect_square_p(n.get_mpz_t()) && mpz_perfect_square_p(d.get_mpz_t())) {
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
    return alpha * Rational(mpq_class(rn, rd));
  }
  return best_rational(std::pow(alpha.to_double(), 1.5), max_den);
}

struct SweepConfig {
  Rational alpha0{1, 2};
  int levels = 5;
  Rational ratio{1, 2};
  std::function<Rational(const Rational&)> beta_rule = [](const Rational& a) { return snapped_beta(a); };
  bool parallel = true;
};

struct ErrorRecord {
  int level = 0;
  std::size_t commodity = 0;
  std::size_t node_pos = 0;
  NodeIndex node = 0;
  std::int64_t packet = 0;
  Rational discrete_time;
  Rational continuous_time;
  Rational error;
};

enum class FlowDirection { inflow, outflow };

struct FlowErrorRecord {
  std::size_t commodity = 0;
  ArcIndex arc = 0;
  FlowDirection direction = FlowDirection::inflow;
  Rational error;
};

struct WaitingBoundResult {
  bool ok = true;
  Rational bound;
  Rational worst_slack;  // bound - lhs, minimal over all samples
  Rational worst_theta;
  std::size_t samples = 0;
};

struct LevelResult {
  int level = 0;
  Discretization discretization;
  std::vector<std::string> warnings;
  std::vector<ErrorRecord> records;
  std::vector<FlowErrorRecord> flow_errors;
  Rational max_arrival_error;
  Rational max_cumflow_error;
  std::optional<Rational> waiting_bound_slack;   // minimum over arcs and commodities
  bool hypothetical_identity = true;              // H+ = G+ and k_u(i beta) = l^D_u(i)
  Rational max_hypothetical_error;                // max |k_v(i beta) - l^D_v(i)|
  std::size_t packets = 0;
  std::int64_t steps = 0;
};

struct FitResult {
  std::optional<double> slope;
  bool exact = false;  // every error is zero
};

struct ConvergenceReport {
  std::vector<LevelResult> levels;
  FitResult fit;
};

inline Rational uniform_flow_error(const PiecewiseLinear& discrete, const PiecewiseLinear& continuous) {
  return sup_abs_difference(discrete, continuous);
}

// Least-squares slope of log(error) against log(alpha). The only
// floating-point computation of the harness.
inline FitResult fit_rate(const std::vector<Rational>& alphas, const std::vector<Rational>& errors) {
  if (alphas.size() != errors.size()) throw std::invalid_argument("one error per alpha expected");
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (errors[k].sign() < 0) throw std::invalid_argument("negative error");
    if (errors[k].sign() == 0) continue;
    xs.push_back(std::log(alphas[k].to_double()));
    ys.push_back(std::log(errors[k].to_double()));
  }
  if (xs.empty()) return {std::nullopt, true};
  if (xs.size() < 3) throw std::invalid_argument("rate fit needs at least 3 levels with positive error");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k], my += ys[k];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  if (sxx == 0) throw std::invalid_argument("rate fit needs distinct alphas");
  return {sxy / sxx, false};
}

// |q^D_j(theta) - z^D(theta + ceil(tau)) / nu| <= 2 alpha + alpha kappa / nu + beta / nu
// at every sample.
inline WaitingBoundResult check_waiting_bound(const DiscreteQueueStats& stats, std::size_t j, const Rational& capacity,
                                              const Rational& kappa, const Discretization& d,
                                              const std::vector<Rational>& thetas) {
  WaitingBoundResult r;
  r.bound = Rational(2) * d.alpha + d.alpha * kappa / capacity + d.beta / capacity;
  r.worst_slack = r.bound;
  for (const auto& theta : thetas) {
    const Rational lhs =
        abs(stats.waiting_time(j, theta) - stats.total_queue_size(theta + stats.rounded_transit()) / capacity);
    const Rational slack = r.bound - lhs;
    if (slack < r.worst_slack || r.samples == 0) {
      r.worst_slack = slack;
      r.worst_theta = theta;
    }
    ++r.samples;
  }
  r.ok = r.worst_slack.sign() >= 0;
  return r;
}

// Refined entrance times of commodity j's packets into arc e.
inline std::vector<Rational> entrance_times(const DiscreteFlowFunctions& f, const Commodity& c, std::size_t j,
                                            ArcIndex e) {
  const auto it = std::find(c.path.begin(), c.path.end(), e);
  if (it == c.path.end()) throw std::invalid_argument("arc is not on the commodity's path");
  const std::size_t h = static_cast<std::size_t>(it - c.path.begin());
  std::vector<Rational> out;
  const std::int64_t count = f.entering(e, j).total();
  for (std::int64_t i = 1; i <= count; ++i) out.push_back(refined_arrival(f, c, j, i, h));
  return out;
}

// Per-arc bridge: discrete inflow rates with continuous outflow dynamics.
struct HypotheticalArcFlow {
  ArcIndex arc = 0;
  std::vector<StepFunction> inflow;   // h+_j = g+_j
  std::vector<StepFunction> outflow;  // h-_j
  ArcDynamics dynamics;

  PiecewiseLinear cumulative_inflow(std::size_t j) const { return inflow.at(j).cumulative(); }
  PiecewiseLinear cumulative_outflow(std::size_t j) const { return outflow.at(j).cumulative(); }

  // min { theta : H+_j(theta) = phi }
  Rational entry_time(std::size_t j, const Rational& phi) const {
    auto t = cumulative_inflow(j).first_reach(phi, Rational(0));
    if (!t) throw std::out_of_range("particle beyond the hypothetical inflow");
    return *t;
  }
  // k_v(phi) = k_u(phi) + tau + q^H(k_u(phi))
  Rational exit_time(std::size_t j, const Rational& phi) const {
    return dynamics.exit_time.at(entry_time(j, phi));
  }
};

inline HypotheticalArcFlow hypothetical_flow(const Network& net, ArcIndex e, const DiscreteFlowFunctions& f) {
  HypotheticalArcFlow h;
  h.arc = e;
  StepFunction total;
  for (std::size_t j = 0; j < f.commodity_count(); ++j) {
    h.inflow.push_back(f.entering(e, j).rate(f.discretization()));
    total = total + h.inflow.back();
  }
  h.dynamics = arc_outflow(total, net.arc(e).transit_time, net.arc(e).capacity);
  h.outflow = commodity_split(h.dynamics.outflow, h.inflow, h.dynamics.exit_time);
  return h;
}

// Runs one discretization level against a loaded continuous flow.
inline LevelResult run_level(const Network& net, const std::vector<Commodity>& commodities,
                             const FlowOverTime& flow, const Discretization& d, int level = 0) {
  LevelResult out;
  out.level = level;
  out.discretization = d;
  out.warnings = discretization_warnings(net, d);

  const auto packets = make_packets(commodities, d);
  const auto arcs = discretize(net, d);
  const EventLog log = network_loading(net, arcs, packets);
  const DiscreteFlowFunctions f = extract_rates(net.arc_count(), commodities.size(), packets, log, d);
  out.packets = packets.size();
  out.steps = log.last_step;

  for (std::size_t j = 0; j < commodities.size(); ++j) {
    const Commodity& c = commodities[j];
    const std::int64_t count = f.entering(c.path.front(), j).total();
    for (std::size_t p = 0; p <= c.path.size(); ++p) {
      const NodeIndex v = p == 0 ? c.origin : net.arc(c.path[p - 1]).head;
      for (std::int64_t i = 1; i <= count; ++i) {
        ErrorRecord r{level, j, p, v, i, refined_arrival(f, c, j, i, p),
                      flow.arrival_time(j, Rational(i) * d.beta, p), {}};
        r.error = abs(r.discrete_time - r.continuous_time);
        out.max_arrival_error = std::max(out.max_arrival_error, r.error);
        out.records.push_back(std::move(r));
      }
    }
    for (ArcIndex e : c.path) {
      for (auto dir : {FlowDirection::inflow, FlowDirection::outflow}) {
        const Rational err =
            dir == FlowDirection::inflow
                ? uniform_flow_error(f.cumulative_inflow(e, j), flow.cumulative_inflow(e, j))
                : uniform_flow_error(f.cumulative_outflow(e, j), flow.cumulative_outflow(e, j));
        out.max_cumflow_error = std::max(out.max_cumflow_error, err);
        out.flow_errors.push_back({j, e, dir, err});
      }
    }
  }

  // Waiting-time bound on every used arc, sampled at the refined entrance
  // times of each commodity's own packets. At instants where a commodity has
  // no packet entering, its waiting time can be zero while other commodities
  // queue, so the bound is only meaningful at these samples.
  std::vector<std::vector<std::size_t>> users(net.arc_count());
  for (std::size_t j = 0; j < commodities.size(); ++j)
    for (ArcIndex e : commodities[j].path) users[e].push_back(j);
  for (ArcIndex e = 0; e < net.arc_count(); ++e) {
    if (users[e].empty()) continue;
    const DiscreteQueueStats stats(f, e, net.arc(e).transit_time);
    const Rational kappa = rate_bound(net, commodities, e);
    for (std::size_t j : users[e]) {
      const auto r = check_waiting_bound(stats, j, net.arc(e).capacity, kappa, d, entrance_times(f, commodities[j], j, e));
      if (!r.ok)
        throw InvariantViolation("waiting-time bound violated on arc '" + net.arc(e).id + "' at theta " +
                                 r.worst_theta.to_string() + " (slack " + r.worst_slack.to_string() + ")");
      if (!out.waiting_bound_slack || r.worst_slack < *out.waiting_bound_slack) out.waiting_bound_slack = r.worst_slack;
    }

    const HypotheticalArcFlow hyp = hypothetical_flow(net, e, f);
    for (std::size_t j : users[e]) {
      const Commodity& c = commodities[j];
      const std::size_t h = static_cast<std::size_t>(std::find(c.path.begin(), c.path.end(), e) - c.path.begin());
      if (!same_function(hyp.cumulative_inflow(j), f.cumulative_inflow(e, j))) out.hypothetical_identity = false;
      const std::int64_t count = f.entering(e, j).total();
      for (std::int64_t i = 1; i <= count; ++i) {
        const Rational phi = Rational(i) * d.beta;
        if (hyp.entry_time(j, phi) != refined_arrival(f, c, j, i, h)) out.hypothetical_identity = false;
        out.max_hypothetical_error =
            std::max(out.max_hypothetical_error, abs(hyp.exit_time(j, phi) - refined_arrival(f, c, j, i, h + 1)));
      }
    }
  }
  return out;
}

inline std::vector<Discretization> sweep_levels(const SweepConfig& cfg) {
  if (cfg.levels < 1) throw std::invalid_argument("at least one level required");
  if (cfg.alpha0.sign() <= 0 || cfg.ratio.sign() <= 0 || !(cfg.ratio < Rational(1)))
    throw std::invalid_argument("alpha0 > 0 and 0 < ratio < 1 required");
  std::vector<Discretization> out;
  Rational alpha = cfg.alpha0;
  for (int k = 0; k < cfg.levels; ++k) {
    out.push_back({alpha, cfg.beta_rule(alpha)});
    alpha *= cfg.ratio;
  }
  return out;
}

inline ConvergenceReport run_sweep(const Network& net, const std::vector<Commodity>& commodities,
                                   const SweepConfig& cfg = {}) {
  const FlowOverTime flow = load_network(net, commodities);
  const auto levels = sweep_levels(cfg);
  ConvergenceReport report;
  report.levels.resize(levels.size());
  auto run = [&](std::size_t k) {
    try {
      return run_level(net, commodities, flow, levels[k], static_cast<int>(k));
    } catch (const std::exception& e) {
      throw std::runtime_error("level " + std::to_string(k) + " (alpha " + levels[k].alpha.to_string() +
                               "): " + e.what());
    }
  };
  if (cfg.parallel) {
    std::vector<std::future<LevelResult>> jobs;
    for (std::size_t k = 0; k < levels.size(); ++k) jobs.push_back(std::async(std::launch::async, run, k));
    for (std::size_t k = 0; k < levels.size(); ++k) report.levels[k] = jobs[k].get();
  } else {
    for (std::size_t k = 0; k < levels.size(); ++k) report.levels[k] = run(k);
  }
  std::vector<Rational> alphas, errors;
  for (const auto& l : report.levels) {
    alphas.push_back(l.discretization.alpha);
    errors.push_back(l.max_arrival_error);
  }
  std::size_t positive = 0;
  for (const auto& e : errors) positive += e.sign() > 0;
  if (positive == 0 || positive >= 3) report.fit = fit_rate(alphas, errors);
  return report;
}

}  // namespace dynflow
