#pragma once

#include <algorithm>
#include <climits>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynflow/model.hpp"

namespace dynflow {

class NonTerminationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A packet of volume beta. Packets are passed to the loader in their global
// order: by source (commodity or player position), then by index.
struct Packet {
  std::size_t source = 0;
  std::int64_t index = 1;  // 1-based within its source
  Path path;
  std::int64_t release_step = 0;
};

struct QueueEntry {
  std::size_t packet = 0;
  std::int64_t entrance_step = 0;

  friend bool operator==(const QueueEntry&, const QueueEntry&) = default;
};

// Packets that have spent at least `steps` steps on the arc at step t: the
// longest prefix (front = oldest) with entrance step <= t - steps.
inline std::span<const QueueEntry> compute_buffer(std::span<const QueueEntry> queue, std::int64_t t,
                                                  std::int64_t steps) {
  std::size_t n = 0;
  while (n < queue.size() && queue[n].entrance_step <= t - steps) ++n;
  return queue.first(n);
}

// Current capacity for step t from the previous step's capacity and buffer.
inline Rational update_capacity(const Rational& nominal, const Rational& previous, std::size_t previous_buffer) {
  if (Rational(static_cast<long long>(previous_buffer)) <= previous) return nominal;
  return nominal + previous - from_integer(previous.floor());
}

struct LeavingSplit {
  std::span<const QueueEntry> leaving;
  std::span<const QueueEntry> waiting;
};

inline std::size_t leaving_count(std::size_t buffer_size, const Rational& capacity) {
  const mpz_class allowed = capacity.floor();
  if (allowed < 0) return 0;
  if (mpz_class(static_cast<unsigned long>(buffer_size)) <= allowed) return buffer_size;
  return static_cast<std::size_t>(allowed.get_ui());
}

inline LeavingSplit select_leaving(std::span<const QueueEntry> buffer, const Rational& capacity) {
  const std::size_t n = leaving_count(buffer.size(), capacity);
  return {buffer.first(n), buffer.subspan(n)};
}

// One contributor to a zipper merge: a real incoming arc or the node's own
// released packets.
struct MergeSource {
  int priority = 0;       // lower wins ties
  bool is_origin = false;  // arcs win ties against the origin at equal priority
  std::size_t order = 0;  // final tie-break
  std::vector<std::size_t> packets;
};

// Priority-counter merge. Source s sending y_s packets starts with counter
// 1/y_s and advances by 1/y_s per pop; the minimal counter pops next.
inline std::vector<std::size_t> zipper_merge(const std::vector<MergeSource>& sources) {
  struct Active {
    const MergeSource* src;
    std::int64_t y;
    std::int64_t popped;
  };
  std::vector<Active> active;
  std::size_t total = 0;
  for (const auto& s : sources) {
    if (s.packets.empty()) continue;
    active.push_back({&s, static_cast<std::int64_t>(s.packets.size()), 0});
    total += s.packets.size();
  }
  // Counter of a is (popped + 1) / y.
  auto before = [](const Active& a, const Active& b) {
    const std::int64_t lhs = (a.popped + 1) * b.y;
    const std::int64_t rhs = (b.popped + 1) * a.y;
    if (lhs != rhs) return lhs < rhs;
    if (a.src->priority != b.src->priority) return a.src->priority < b.src->priority;
    if (a.src->is_origin != b.src->is_origin) return !a.src->is_origin;
    return a.src->order < b.src->order;
  };
  std::vector<std::size_t> out;
  out.reserve(total);
  while (!active.empty()) {
    auto best = active.begin();
    for (auto it = active.begin() + 1; it != active.end(); ++it)
      if (before(*it, *best)) best = it;
    out.push_back(best->src->packets[static_cast<std::size_t>(best->popped)]);
    if (++best->popped == best->y) active.erase(best);
  }
  return out;
}

// A packet together with the arc it moves onto next.
struct Routed {
  std::size_t packet = 0;
  ArcIndex next = 0;
};

struct MergeRules {
  // Tie rank of packets released at a node. Unset: loses every tie against
  // real arcs.
  std::optional<int> origin_priority;
};

// Node transition at node v for one step. `leaving` holds, for each arc of
// net.in_arcs(v) in that order, the packets continuing past v; `released`
// holds the packets starting at v. Returns one entering list per arc of
// net.out_arcs(v).
inline std::vector<std::vector<std::size_t>> node_transition(const Network& net, NodeIndex v,
                                                             const std::vector<std::vector<Routed>>& leaving,
                                                             const std::vector<Routed>& released,
                                                             const MergeRules& rules = {}) {
  const auto& ins = net.in_arcs(v);
  const auto& outs = net.out_arcs(v);
  if (leaving.size() != ins.size()) throw std::invalid_argument("one leaving list per incoming arc expected");
  auto check = [&](const Routed& r) {
    if (net.arc(r.next).tail != v)
      throw InvariantViolation("packet " + std::to_string(r.packet) + " routed onto arc '" + net.arc(r.next).id +
                               "' which does not leave node '" + net.node_id(v) + "'");
  };
  for (const auto& list : leaving)
    for (const auto& r : list) check(r);
  for (const auto& r : released) check(r);

  std::vector<std::vector<std::size_t>> result(outs.size());
  for (std::size_t o = 0; o < outs.size(); ++o) {
    const ArcIndex e = outs[o];
    std::vector<MergeSource> sources;
    for (std::size_t k = 0; k < ins.size(); ++k) {
      MergeSource s{net.arc(ins[k]).merge_priority, false, ins[k], {}};
      for (const auto& r : leaving[k])
        if (r.next == e) s.packets.push_back(r.packet);
      if (!s.packets.empty()) sources.push_back(std::move(s));
    }
    MergeSource origin{rules.origin_priority.value_or(INT_MAX), true, net.arc_count(), {}};
    for (const auto& r : released)
      if (r.next == e) origin.packets.push_back(r.packet);
    if (!origin.packets.empty()) sources.push_back(std::move(origin));
    result[o] = zipper_merge(sources);
  }
  return result;
}

enum class EventKind { leave, arrive, release, enter };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::leave: return "leave";
    case EventKind::arrive: return "arrive";
    case EventKind::release: return "release";
    case EventKind::enter: return "enter";
  }
  return "?";
}

struct Event {
  std::int64_t step = 0;
  EventKind kind = EventKind::leave;
  std::size_t location = 0;  // arc index for leave/enter, node index otherwise
  std::size_t packet = 0;
  std::size_t position = 1;  // 1-based position within its list
};

// Full record of one network loading. Events are stored per step in the
// order leave, arrive, release, enter; within a kind by location, then by
// position.
struct EventLog {
  std::vector<Event> events;
  std::vector<std::int64_t> arrival_step;              // per packet
  std::vector<std::vector<std::int64_t>> enter_step;   // per packet, per hop
  std::vector<std::vector<std::int64_t>> leave_step;   // per packet, per hop
  std::int64_t last_step = 0;
};

struct SimulationConfig {
  MergeRules merge;
  std::optional<std::int64_t> step_cap;
};

inline std::int64_t default_step_cap(const std::vector<DiscretizedArc>& arcs, const std::vector<Packet>& packets) {
  std::int64_t max_release = 0;
  for (const auto& p : packets) max_release = std::max(max_release, p.release_step);
  std::int64_t max_steps = 1;
  Rational min_rate = arcs.empty() ? Rational(1) : arcs.front().packets_per_step;
  for (const auto& a : arcs) {
    max_steps = std::max(max_steps, a.steps);
    min_rate = std::min(min_rate, a.packets_per_step);
  }
  const std::int64_t per_packet = max_steps + (Rational(1) / min_rate).ceil().get_si();
  return 4 * (max_release + 1 + static_cast<std::int64_t>(packets.size()) * per_packet);
}

// Packet-routing network loading: each step computes the leaving packets of
// every arc, finalizes packets reaching their destination, runs the node
// transitions and then updates queues and current capacities.
inline EventLog network_loading(const Network& net, const std::vector<DiscretizedArc>& arcs,
                                const std::vector<Packet>& packets, const SimulationConfig& config = {}) {
  if (arcs.size() != net.arc_count()) throw std::invalid_argument("discretized arcs do not match the network");
  const std::size_t n = packets.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (packets[i].path.empty()) throw std::invalid_argument("packet with empty path");
    if (packets[i].release_step < 0) throw std::invalid_argument("negative release step");
    if (i > 0 && std::pair(packets[i].source, packets[i].index) <= std::pair(packets[i - 1].source, packets[i - 1].index))
      throw std::invalid_argument("packets must be listed in global (source, index) order");
  }
  for (const auto& a : arcs)
    if (a.steps < 1 || a.packets_per_step.sign() <= 0) throw std::invalid_argument("invalid discretized arc");

  EventLog log;
  log.arrival_step.assign(n, -1);
  log.enter_step.resize(n);
  log.leave_step.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    log.enter_step[i].assign(packets[i].path.size(), -1);
    log.leave_step[i].assign(packets[i].path.size(), -1);
  }
  if (n == 0) return log;

  const std::int64_t cap = config.step_cap.value_or(default_step_cap(arcs, packets));

  std::vector<std::size_t> by_release(n);
  for (std::size_t i = 0; i < n; ++i) by_release[i] = i;
  std::stable_sort(by_release.begin(), by_release.end(),
                   [&](std::size_t a, std::size_t b) { return packets[a].release_step < packets[b].release_step; });
  std::size_t next_release = 0;

  std::vector<std::vector<QueueEntry>> queue(arcs.size());
  std::vector<std::size_t> head(arcs.size(), 0);
  std::vector<Rational> capacity(arcs.size());
  for (std::size_t e = 0; e < arcs.size(); ++e) capacity[e] = arcs[e].packets_per_step;
  std::vector<std::size_t> hop(n, 0);
  std::size_t arrived = 0;
  std::size_t in_network = 0;

  std::vector<std::vector<std::size_t>> leaving(arcs.size());
  std::vector<std::vector<std::size_t>> entering(arcs.size());
  std::vector<std::vector<Routed>> released(net.node_count());

  std::int64_t t = 0;
  while (arrived < n) {
    if (in_network == 0 && next_release < n && packets[by_release[next_release]].release_step > t) {
      // Idle network: nothing moves and every capacity is back at nominal.
      t = packets[by_release[next_release]].release_step;
      for (std::size_t e = 0; e < arcs.size(); ++e) capacity[e] = arcs[e].packets_per_step;
    }
    if (t > cap) throw NonTerminationError("network loading exceeded the step cap of " + std::to_string(cap));

    // Arc dynamics.
    std::vector<Rational> next_capacity(arcs.size());
    for (std::size_t e = 0; e < arcs.size(); ++e) {
      std::span<const QueueEntry> q(queue[e].data() + head[e], queue[e].size() - head[e]);
      const auto buffer = compute_buffer(q, t, arcs[e].steps);
      const auto split = select_leaving(buffer, capacity[e]);
      leaving[e].clear();
      for (std::size_t k = 0; k < split.leaving.size(); ++k) {
        const std::size_t i = split.leaving[k].packet;
        leaving[e].push_back(i);
        log.leave_step[i][hop[i]] = t;
        log.events.push_back({t, EventKind::leave, e, i, k + 1});
      }
      head[e] += split.leaving.size();
      next_capacity[e] = update_capacity(arcs[e].packets_per_step, capacity[e], buffer.size());
    }

    // Arrivals.
    std::vector<std::size_t> arrivals_at(net.node_count(), 0);
    for (std::size_t e = 0; e < arcs.size(); ++e) {
      for (std::size_t i : leaving[e]) {
        if (hop[i] + 1 == packets[i].path.size()) {
          log.arrival_step[i] = t;
          ++arrived;
          --in_network;
          const NodeIndex d = net.arc(e).head;
          log.events.push_back({t, EventKind::arrive, d, i, ++arrivals_at[d]});
        }
      }
    }

    // Releases.
    for (auto& r : released) r.clear();
    while (next_release < n && packets[by_release[next_release]].release_step == t) {
      const std::size_t i = by_release[next_release++];
      const NodeIndex o = net.arc(packets[i].path.front()).tail;
      released[o].push_back({i, packets[i].path.front()});
    }
    for (NodeIndex v = 0; v < net.node_count(); ++v)
      for (std::size_t k = 0; k < released[v].size(); ++k)
        log.events.push_back({t, EventKind::release, v, released[v][k].packet, k + 1});

    // Node transitions.
    for (auto& list : entering) list.clear();
    for (NodeIndex v = 0; v < net.node_count(); ++v) {
      const auto& ins = net.in_arcs(v);
      std::vector<std::vector<Routed>> moving(ins.size());
      bool any = !released[v].empty();
      for (std::size_t k = 0; k < ins.size(); ++k) {
        for (std::size_t i : leaving[ins[k]]) {
          if (hop[i] + 1 < packets[i].path.size()) {
            moving[k].push_back({i, packets[i].path[hop[i] + 1]});
            any = true;
          }
        }
      }
      if (!any) continue;
      for (const auto& list : moving)
        for (const auto& r : list) ++hop[r.packet];
      auto lists = node_transition(net, v, moving, released[v], config.merge);
      const auto& outs = net.out_arcs(v);
      for (std::size_t o = 0; o < outs.size(); ++o) entering[outs[o]] = std::move(lists[o]);
    }

    // Queue and capacity updates.
    for (std::size_t e = 0; e < arcs.size(); ++e) {
      for (std::size_t k = 0; k < entering[e].size(); ++k) {
        const std::size_t i = entering[e][k];
        if (hop[i] == 0 && log.enter_step[i][0] < 0) ++in_network;
        if (packets[i].path[hop[i]] != e) throw InvariantViolation("packet entered an arc off its path");
        log.enter_step[i][hop[i]] = t;
        queue[e].push_back({i, t});
        log.events.push_back({t, EventKind::enter, e, i, k + 1});
      }
      if (head[e] > 1024 && head[e] * 2 > queue[e].size()) {
        queue[e].erase(queue[e].begin(), queue[e].begin() + static_cast<std::ptrdiff_t>(head[e]));
        head[e] = 0;
      }
      capacity[e] = std::move(next_capacity[e]);
    }
    log.last_step = t;
    ++t;
  }
  return log;
}

}  // namespace dynflow
