#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "dynflow/continuous_flow.hpp"
#include "dynflow/convergence.hpp"
#include "dynflow/coupling.hpp"
#include "dynflow/discrete_sim.hpp"
#include "dynflow/game.hpp"

namespace dynflow {

// Minimal CSV writer. Rational cells are written exactly as "p/q"; with
// `decimal` set each one is followed by an approximate decimal column.
class CsvWriter {
 public:
  using Cell = std::variant<std::string, long long, Rational>;

  CsvWriter(std::ostream& out, bool decimal) : out_(out), decimal_(decimal) {}

  // Columns named in `rational_columns` get a "<name>_decimal" companion.
  void header(const std::vector<std::string>& names, const std::vector<std::string>& rational_columns = {}) {
    std::vector<std::string> cols;
    for (const auto& n : names) {
      cols.push_back(n);
      if (decimal_ && std::find(rational_columns.begin(), rational_columns.end(), n) != rational_columns.end())
        cols.push_back(n + "_decimal");
    }
    write_line(cols);
  }

  void row(const std::vector<Cell>& cells) {
    std::vector<std::string> cols;
    for (const auto& c : cells) {
      if (const auto* s = std::get_if<std::string>(&c)) {
        cols.push_back(*s);
      } else if (const auto* i = std::get_if<long long>(&c)) {
        cols.push_back(std::to_string(*i));
      } else {
        const Rational& r = std::get<Rational>(c);
        cols.push_back(r.to_string());
        if (decimal_) cols.push_back(decimal_string(r));
      }
    }
    write_line(cols);
  }

  static std::string decimal_string(const Rational& r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", r.to_double());
    return buf;
  }

 private:
  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  }

  void write_line(const std::vector<std::string>& cols) {
    for (std::size_t k = 0; k < cols.size(); ++k) out_ << (k ? "," : "") << escape(cols[k]);
    out_ << '\n';
  }

  std::ostream& out_;
  bool decimal_;
};

// Commodity packets followed by one packet per player, with the id of each
// packet source. Players without a path get their lexicographically first one.
struct ScenarioPackets {
  std::vector<Packet> packets;
  std::vector<std::string> source_ids;
};

inline ScenarioPackets scenario_packets(const Scenario& sc) {
  if (!sc.discretization) throw std::invalid_argument("scenario has no discretization");
  const Discretization& d = *sc.discretization;
  ScenarioPackets out;
  out.packets = make_packets(sc.commodities, d);
  for (const auto& c : sc.commodities) out.source_ids.push_back(c.id);
  const PathProfile profile = default_profile(sc.network, sc.players);
  for (std::size_t i = 0; i < sc.players.size(); ++i) {
    const Rational steps = sc.players[i].release / d.alpha;
    if (!steps.is_integer()) throw std::invalid_argument("player release is not on the time grid");
    out.packets.push_back({sc.commodities.size() + i, 1, profile[i], steps.to_int64()});
    out.source_ids.push_back(sc.players[i].id);
  }
  return out;
}

// Columns: step, arc_or_node, event, commodity, packet_index, position_in_list.
// Rows sorted by (step, event kind in processing order, location index, position).
inline void write_event_log_csv(std::ostream& os, const Network& net, const ScenarioPackets& sp, const EventLog& log) {
  std::vector<Event> events = log.events;
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.step, a.kind, a.location, a.position) < std::tie(b.step, b.kind, b.location, b.position);
  });
  CsvWriter w(os, false);
  w.header({"step", "arc_or_node", "event", "commodity", "packet_index", "position_in_list"});
  for (const auto& e : events) {
    const bool on_arc = e.kind == EventKind::leave || e.kind == EventKind::enter;
    const Packet& p = sp.packets.at(e.packet);
    w.row({static_cast<long long>(e.step), on_arc ? net.arc(e.location).id : net.node_id(e.location),
           std::string(to_string(e.kind)), sp.source_ids.at(p.source), static_cast<long long>(p.index),
           static_cast<long long>(e.position)});
  }
}

// Columns: arc, commodity|"total", kind, time, value_or_slope. Rates are
// written at every breakpoint with the value holding from there on; the
// queue is written as its piecewise-linear points. Rows are ordered by arc
// index, commodity index ("total" last), kind, time.
inline void write_breakpoints_csv(std::ostream& os, const Network& net, const FlowOverTime& flow, bool decimal) {
  CsvWriter w(os, decimal);
  w.header({"arc", "commodity", "kind", "time", "value_or_slope"}, {"time", "value_or_slope"});
  auto steps = [&](const std::string& arc, const std::string& who, const char* kind, const StepFunction& f) {
    for (const auto& b : f.breakpoints()) w.row({arc, who, std::string(kind), b, f.at(b)});
  };
  for (ArcIndex e = 0; e < net.arc_count(); ++e) {
    const ArcFlow& a = flow.arcs.at(e);
    const std::string& id = net.arc(e).id;
    for (std::size_t j = 0; j < flow.commodities.size(); ++j) {
      steps(id, flow.commodities[j].id, "inflow", a.inflow[j]);
      steps(id, flow.commodities[j].id, "outflow", a.outflow[j]);
    }
    steps(id, "total", "inflow", a.total_inflow);
    steps(id, "total", "outflow", a.dynamics.outflow);
    for (const auto& [t, v] : a.dynamics.queue.points()) w.row({id, std::string("total"), std::string("queue"), t, v});
  }
}

// Columns: commodity, packet, node, refined_time, step, position. Rows
// ordered by commodity, node position along the path, packet.
inline void write_refined_times_csv(std::ostream& os, const Network& net, const std::vector<Commodity>& commodities,
                                    const std::vector<RefinedTime>& times, bool decimal) {
  CsvWriter w(os, decimal);
  w.header({"commodity", "packet", "node", "refined_time", "step", "position"}, {"refined_time"});
  for (const auto& r : times)
    w.row({commodities.at(r.commodity).id, static_cast<long long>(r.packet), net.node_id(r.node), r.refined_time,
           static_cast<long long>(r.step), static_cast<long long>(r.position)});
}

// Columns: level, alpha, beta, commodity, node, packet, discrete_time,
// continuous_time, abs_error. Rows ordered by level, commodity, node
// position, packet.
inline void write_records_csv(std::ostream& os, const Network& net, const std::vector<Commodity>& commodities,
                              const ConvergenceReport& report, bool decimal) {
  CsvWriter w(os, decimal);
  w.header({"level", "alpha", "beta", "commodity", "node", "packet", "discrete_time", "continuous_time", "abs_error"},
           {"alpha", "beta", "discrete_time", "continuous_time", "abs_error"});
  for (const auto& l : report.levels)
    for (const auto& r : l.records)
      w.row({static_cast<long long>(l.level), l.discretization.alpha, l.discretization.beta,
             commodities.at(r.commodity).id, net.node_id(r.node), static_cast<long long>(r.packet), r.discrete_time,
             r.continuous_time, r.error});
}

// Columns: level, alpha, beta, max_arrival_error, max_cumflow_error,
// fitted_rate. The rate is filled in on the last row only; it reads "exact"
// when every level has zero error.
inline void write_summary_csv(std::ostream& os, const ConvergenceReport& report, bool decimal) {
  CsvWriter w(os, decimal);
  w.header({"level", "alpha", "beta", "max_arrival_error", "max_cumflow_error", "fitted_rate"},
           {"alpha", "beta", "max_arrival_error", "max_cumflow_error"});
  for (std::size_t k = 0; k < report.levels.size(); ++k) {
    const auto& l = report.levels[k];
    std::string rate;
    if (k + 1 == report.levels.size()) {
      if (report.fit.exact)
        rate = "exact";
      else if (report.fit.slope)
        rate = std::to_string(*report.fit.slope);
    }
    w.row({static_cast<long long>(l.level), l.discretization.alpha, l.discretization.beta, l.max_arrival_error,
           l.max_cumflow_error, rate});
  }
}

// Columns: player, current_cost, best_deviation_path, best_cost,
// improvement, verdict_at_epsilon. One row per player in input order.
inline void write_equilibrium_csv(std::ostream& os, const Network& net, const std::vector<Player>& players,
                                  const EquilibriumReport& report, bool decimal) {
  CsvWriter w(os, decimal);
  w.header({"player", "current_cost", "best_deviation_path", "best_cost", "improvement", "verdict_at_epsilon"},
           {"current_cost", "best_cost", "improvement"});
  for (const auto& p : report.players)
    w.row({players.at(p.player).id, p.current_cost, path_to_string(net, p.best_path), p.best_cost, p.improvement,
           std::string(report.epsilon < p.improvement ? "improvable" : "stable")});
}

}  // namespace dynflow
