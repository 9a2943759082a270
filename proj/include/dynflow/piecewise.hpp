#pragma once

#include <algorithm>
#include <cassert>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dynflow/rational.hpp"

namespace dynflow {

class PiecewiseLinear;

// Constant rate on [start, end).
struct RatePiece {
  Rational start;
  Rational end;
  Rational rate;
};

// Right-continuous piecewise-constant function with bounded support.
// Value on [breakpoint[k], breakpoint[k+1]) is values[k]; zero outside.
class StepFunction {
 public:
  StepFunction() = default;

  // Pieces must be sorted and pairwise disjoint; gaps are filled with zero.
  static StepFunction from_pieces(const std::vector<RatePiece>& pieces) {
    StepFunction f;
    for (const auto& p : pieces) {
      if (!(p.start < p.end)) {
        if (p.start == p.end) continue;
        throw std::invalid_argument("step piece with end before start");
      }
      if (f.breaks_.empty()) {
        f.breaks_.push_back(p.start);
      } else if (p.start < f.breaks_.back()) {
        throw std::invalid_argument("step pieces overlap or are unsorted");
      } else if (f.breaks_.back() < p.start) {
        f.values_.push_back(Rational(0));
        f.breaks_.push_back(p.start);
      }
      f.values_.push_back(p.rate);
      f.breaks_.push_back(p.end);
    }
    return f.normalized();
  }

  bool is_zero() const { return values_.empty(); }
  const std::vector<Rational>& breakpoints() const { return breaks_; }
  const std::vector<Rational>& values() const { return values_; }
  std::size_t piece_count() const { return values_.size(); }
  RatePiece piece(std::size_t k) const { return {breaks_[k], breaks_[k + 1], values_[k]}; }

  Rational support_start() const { return breaks_.empty() ? Rational(0) : breaks_.front(); }
  Rational support_end() const { return breaks_.empty() ? Rational(0) : breaks_.back(); }

  Rational at(const Rational& t) const {
    if (breaks_.empty() || t < breaks_.front() || !(t < breaks_.back())) return Rational(0);
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
  }

  Rational total() const {
    Rational sum(0);
    for (std::size_t k = 0; k < values_.size(); ++k) sum += values_[k] * (breaks_[k + 1] - breaks_[k]);
    return sum;
  }

  Rational max_value() const {
    Rational m(0);
    for (const auto& v : values_) m = std::max(m, v);
    return m;
  }

  StepFunction shifted(const Rational& delta) const {
    StepFunction f = *this;
    for (auto& b : f.breaks_) b += delta;
    return f;
  }

  StepFunction scaled(const Rational& c) const {
    StepFunction f = *this;
    for (auto& v : f.values_) v *= c;
    return f.normalized();
  }

  // Zero from `horizon` on.
  StepFunction truncated(const Rational& horizon) const {
    std::vector<RatePiece> out;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!(breaks_[k] < horizon)) break;
      out.push_back({breaks_[k], std::min(breaks_[k + 1], horizon), values_[k]});
    }
    return from_pieces(out);
  }

  PiecewiseLinear cumulative() const;

  friend StepFunction operator+(const StepFunction& a, const StepFunction& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    std::vector<Rational> pts = a.breaks_;
    pts.insert(pts.end(), b.breaks_.begin(), b.breaks_.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<RatePiece> out;
    out.reserve(pts.size());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
      out.push_back({pts[k], pts[k + 1], a.at(pts[k]) + b.at(pts[k])});
    return from_pieces(out);
  }

  friend bool operator==(const StepFunction& a, const StepFunction& b) {
    return a.breaks_ == b.breaks_ && a.values_ == b.values_;
  }

 private:
  // Merges equal neighbours and trims zero pieces at both ends.
  StepFunction normalized() const {
    StepFunction f;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (f.values_.empty()) {
        if (values_[k].sign() == 0) continue;
        f.breaks_.push_back(breaks_[k]);
        f.values_.push_back(values_[k]);
        f.breaks_.push_back(breaks_[k + 1]);
      } else if (f.values_.back() == values_[k]) {
        f.breaks_.back() = breaks_[k + 1];
      } else {
        f.values_.push_back(values_[k]);
        f.breaks_.push_back(breaks_[k + 1]);
      }
    }
    while (!f.values_.empty() && f.values_.back().sign() == 0) {
      f.values_.pop_back();
      f.breaks_.pop_back();
    }
    if (f.values_.empty()) f.breaks_.clear();
    return f;
  }

  std::vector<Rational> breaks_;
  std::vector<Rational> values_;
};

// Continuous piecewise-linear function on [t0, inf), linear between the
// stored points, extended with `tail_slope` after the last point and held
// constant at its first value before t0.
class PiecewiseLinear {
 public:
  using Point = std::pair<Rational, Rational>;

  PiecewiseLinear() : points_{{Rational(0), Rational(0)}} {}
  PiecewiseLinear(std::vector<Point> points, Rational tail_slope = Rational(0))
      : points_(std::move(points)), tail_slope_(std::move(tail_slope)) {
    if (points_.empty()) throw std::invalid_argument("piecewise-linear function needs a point");
    for (std::size_t k = 1; k < points_.size(); ++k)
      if (!(points_[k - 1].first < points_[k].first))
        throw std::invalid_argument("piecewise-linear breakpoints must increase");
    simplify();
  }

  const std::vector<Point>& points() const { return points_; }
  const Rational& tail_slope() const { return tail_slope_; }
  const Rational& start() const { return points_.front().first; }
  const Rational& last_breakpoint() const { return points_.back().first; }

  std::vector<Rational> breakpoints() const {
    std::vector<Rational> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.first);
    return out;
  }

  Rational at(const Rational& t) const {
    if (!(points_.front().first < t)) return points_.front().second;
    if (!(t < points_.back().first)) return points_.back().second + tail_slope_ * (t - points_.back().first);
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](const Rational& x, const Point& p) { return x < p.first; });
    const Point& hi = *it;
    const Point& lo = *(it - 1);
    return lo.second + (hi.second - lo.second) * (t - lo.first) / (hi.first - lo.first);
  }

  // min { t >= from : f(t) >= target } for a non-decreasing f.
  std::optional<Rational> first_reach(const Rational& target, const Rational& from) const {
    const Rational at_from = at(from);
    if (!(at_from < target)) return from;
    // First stored point strictly after `from`, then the first one reaching
    // the target (values are non-decreasing).
    auto after = std::upper_bound(points_.begin(), points_.end(), from,
                                  [](const Rational& x, const Point& p) { return x < p.first; });
    auto hit = std::lower_bound(after, points_.end(), target,
                                [](const Point& p, const Rational& y) { return p.second < y; });
    if (hit != points_.end()) {
      const bool first_segment = hit == after;
      const Rational lo_t = first_segment ? std::max(from, (hit - 1)->first) : (hit - 1)->first;
      const Rational lo_v = first_segment ? at_from : (hit - 1)->second;
      const Rational slope = (hit->second - (hit - 1)->second) / (hit->first - (hit - 1)->first);
      return lo_t + (target - lo_v) / slope;
    }
    if (tail_slope_.sign() > 0) {
      const Rational lo_t = std::max(points_.back().first, from);
      return lo_t + (target - at(lo_t)) / tail_slope_;
    }
    return std::nullopt;
  }

  // min { t >= start : f(t) >= target }.
  std::optional<Rational> first_reach(const Rational& target) const { return first_reach(target, start()); }

  Rational final_value() const {
    if (tail_slope_.sign() != 0) throw std::logic_error("unbounded piecewise-linear function");
    return points_.back().second;
  }

  friend PiecewiseLinear combine(const PiecewiseLinear& a, const PiecewiseLinear& b, const Rational& cb) {
    std::vector<Rational> ts = a.breakpoints();
    const auto tb = b.breakpoints();
    ts.insert(ts.end(), tb.begin(), tb.end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<Point> pts;
    pts.reserve(ts.size());
    for (const auto& t : ts) pts.emplace_back(t, a.at(t) + cb * b.at(t));
    return PiecewiseLinear(std::move(pts), a.tail_slope_ + cb * b.tail_slope_);
  }
  friend PiecewiseLinear operator+(const PiecewiseLinear& a, const PiecewiseLinear& b) {
    return combine(a, b, Rational(1));
  }
  friend PiecewiseLinear operator-(const PiecewiseLinear& a, const PiecewiseLinear& b) {
    return combine(a, b, Rational(-1));
  }

 private:
  void simplify() {
    if (points_.size() < 3) return;
    std::vector<Point> out;
    out.reserve(points_.size());
    out.push_back(points_.front());
    for (std::size_t k = 1; k + 1 < points_.size(); ++k) {
      const Point& a = out.back();
      const Point& b = points_[k];
      const Point& c = points_[k + 1];
      if ((b.second - a.second) * (c.first - b.first) != (c.second - b.second) * (b.first - a.first))
        out.push_back(b);
    }
    out.push_back(points_.back());
    // Drop a trailing point that lies on the tail ray.
    while (out.size() >= 2) {
      const Point& a = out[out.size() - 2];
      const Point& b = out.back();
      if ((b.second - a.second) != tail_slope_ * (b.first - a.first)) break;
      out.pop_back();
    }
    points_ = std::move(out);
  }

  std::vector<Point> points_;
  Rational tail_slope_{0};
};

// Integral from 0; the result starts at (0, 0).
inline PiecewiseLinear StepFunction::cumulative() const {
  std::vector<PiecewiseLinear::Point> pts;
  pts.emplace_back(Rational(0), Rational(0));
  if (breaks_.empty()) return PiecewiseLinear(std::move(pts));
  if (breaks_.front().sign() < 0) throw std::domain_error("cumulative of a function with negative support");
  Rational acc(0);
  if (breaks_.front().sign() > 0) pts.emplace_back(breaks_.front(), acc);
  for (std::size_t k = 0; k < values_.size(); ++k) {
    acc += values_[k] * (breaks_[k + 1] - breaks_[k]);
    pts.emplace_back(breaks_[k + 1], acc);
  }
  return PiecewiseLinear(std::move(pts));
}

// Exact sup |a - b| over [0, inf). Both functions must share a tail slope.
inline Rational sup_abs_difference(const PiecewiseLinear& a, const PiecewiseLinear& b) {
  if (a.tail_slope() != b.tail_slope()) throw std::domain_error("sup distance is unbounded");
  const PiecewiseLinear d = a - b;
  Rational best = abs(d.at(Rational(0)));
  for (const auto& [t, v] : d.points())
    if (!(t.sign() < 0)) best = std::max(best, abs(v));
  return best;
}

inline bool same_function(const PiecewiseLinear& a, const PiecewiseLinear& b) {
  return a.tail_slope() == b.tail_slope() && sup_abs_difference(a, b).sign() == 0;
}

}  // namespace dynflow
