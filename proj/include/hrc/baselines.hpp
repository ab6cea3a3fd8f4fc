#pragma once

// Reference methods: exhaustive enumeration of every decision route, and
// sampling of uniformly random routes.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "hrc/game.hpp"

namespace hrc {

struct RouteStep {
  AgentId agent;
  AgentAction action;
};

struct OracleResult {
  enum class Status { Complete, BudgetExceeded };

  Status status = Status::Complete;
  int exceeded_at_depth = 0;  // first depth that could not be fully enumerated
  std::optional<Time> optimum;
  std::vector<RouteStep> route;  // one optimal route (best found so far when over budget)
  /// routes[d]: distinct decision prefixes of length d, for every fully
  /// enumerated depth (routes[0] == 1, the empty prefix).
  std::vector<std::uint64_t> routes;
  /// leaves[d]: complete routes of exactly d decisions.
  std::vector<std::uint64_t> leaves;
  std::uint64_t nodes_expanded = 0;  // prefixes enumerated in the deepest pass
  std::uint64_t total_work = 0;      // all expansions over every pass

  bool complete() const { return status == Status::Complete; }

  std::uint64_t complete_routes() const {
    std::uint64_t n = 0;
    for (auto v : leaves) n += v;
    return n;
  }
};

namespace detail {

class RouteEnumerator {
 public:
  RouteEnumerator(const JobPtr& job, std::uint64_t budget) : job_(job), budget_(budget) {}

  // Enumerates all prefixes up to `limit` decisions. Returns false when the
  // budget ran out.
  bool pass(int limit) {
    limit_ = limit;
    routes_.assign(static_cast<std::size_t>(limit) + 1, 0);
    leaves_.assign(static_cast<std::size_t>(limit) + 1, 0);
    routes_[0] = 1;
    nodes_ = 0;
    frontier_ = false;
    stack_.clear();
    GameState root(job_);
    settle(root);
    return visit(root, 0);
  }

  bool frontier() const { return frontier_; }
  const std::vector<std::uint64_t>& routes() const { return routes_; }
  const std::vector<std::uint64_t>& leaves() const { return leaves_; }
  std::uint64_t nodes() const { return nodes_; }
  std::uint64_t work() const { return work_; }
  const std::optional<Time>& best() const { return best_; }
  const std::vector<RouteStep>& best_route() const { return best_route_; }

 private:
  static void settle(GameState& s) {
    while (!s.is_terminal() && !s.next_decider()) s.advance_time();
  }

  bool visit(const GameState& state, int depth) {
    if (state.is_terminal()) {
      ++leaves_[depth];
      if (!best_ || state.clock() < *best_) {
        best_ = state.clock();
        best_route_ = stack_;
      }
      return true;
    }
    if (depth == limit_) {
      frontier_ = true;
      return true;
    }
    const AgentId agent = *state.next_decider();
    for (const AgentAction& a : state.legal_actions(agent)) {
      if (work_ == budget_) return false;
      ++work_;
      ++nodes_;
      ++routes_[depth + 1];
      GameState child = state;
      child.apply(agent, a);
      settle(child);
      stack_.push_back({agent, a});
      bool ok = visit(child, depth + 1);
      stack_.pop_back();
      if (!ok) return false;
    }
    return true;
  }

  JobPtr job_;
  std::uint64_t budget_;
  int limit_ = 0;
  std::vector<std::uint64_t> routes_;
  std::vector<std::uint64_t> leaves_;
  std::uint64_t nodes_ = 0;
  std::uint64_t work_ = 0;
  bool frontier_ = false;
  std::vector<RouteStep> stack_;
  std::optional<Time> best_;
  std::vector<RouteStep> best_route_;
};

}  // namespace detail

/// Depth-first enumeration of every legal micro-decision sequence, run as
/// iterative deepening so that per-depth route counts are exact for every
/// depth finished before the node budget runs out. The budget caps expansions
/// summed over all passes.
inline OracleResult exhaustive_search(const JobPtr& job, std::uint64_t node_budget) {
  if (node_budget < 1) node_budget = 1;
  detail::RouteEnumerator en(job, node_budget);
  OracleResult r;
  for (int limit = 1;; ++limit) {
    const bool ok = en.pass(limit);
    if (!ok) {
      r.status = OracleResult::Status::BudgetExceeded;
      r.exceeded_at_depth = limit;
      r.nodes_expanded = en.nodes();
      break;
    }
    r.routes = en.routes();
    r.leaves = en.leaves();
    r.nodes_expanded = en.nodes();
    if (!en.frontier()) {
      r.status = OracleResult::Status::Complete;
      break;
    }
  }
  r.total_work = en.work();
  if (r.routes.empty()) r.routes = {1};
  if (r.leaves.empty()) r.leaves = {0};
  r.optimum = en.best();
  r.route = en.best_route();
  return r;
}

inline OracleResult exhaustive_search(const JobSpec& spec, std::uint64_t node_budget, GameRules rules = {}) {
  return exhaustive_search(make_job(spec, rules), node_budget);
}

struct SampleStats {
  std::vector<Time> makespans;
  double mean = 0.0;
  Time min = 0;
  Time max = 0;
  std::map<Time, std::uint64_t> histogram;  // bin width 1

  std::size_t count() const { return makespans.size(); }
};

inline SampleStats summarize(std::vector<Time> makespans) {
  SampleStats s;
  s.makespans = std::move(makespans);
  if (s.makespans.empty()) return s;
  double sum = 0.0;
  s.min = s.max = s.makespans.front();
  for (Time m : s.makespans) {
    sum += static_cast<double>(m);
    s.min = std::min(s.min, m);
    s.max = std::max(s.max, m);
    ++s.histogram[m];
  }
  s.mean = sum / static_cast<double>(s.makespans.size());
  return s;
}

/// Seed of trajectory `i` in a batch seeded with `seed`.
inline std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t i) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

/// Episodes under a uniformly random task choice (NoOp only when forced).
inline SampleStats random_rollouts(const JobPtr& job, std::size_t trajectories, std::uint64_t seed) {
  std::vector<Time> makespans;
  makespans.reserve(trajectories);
  for (std::size_t i = 0; i < trajectories; ++i) {
    makespans.push_back(run_episode(job, RandomPickPolicy{}, trajectory_seed(seed, i)).makespan);
  }
  return summarize(std::move(makespans));
}

inline SampleStats random_rollouts(const JobSpec& spec, std::size_t trajectories, std::uint64_t seed,
                                   GameRules rules = {}) {
  return random_rollouts(make_job(spec, rules), trajectories, seed);
}

}  // namespace hrc
