#pragma once

// PUCT Monte Carlo tree search over micro-decisions.
//
// Each tree edge is one agent's decision. Following an edge applies the
// decision and, when that closes the epoch, advances time; the (non-positive)
// reward of that advance is stored on the edge. A simulation descends by
//
//   argmax_a  Q(s,a) + c * P(s,a) * sqrt(sum_b N(s,b)) / (1 + N(s,a))
//
// until it reaches an unexpanded node, a terminal node (value 0) or the depth
// limit (counted in epochs), then backs the undiscounted return up the path:
// every edge receives its own reward, the rewards below it and the leaf value.
// Values are raw time-units, so Q estimates minus the remaining makespan.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hrc/error.hpp"
#include "hrc/game.hpp"
#include "hrc/net.hpp"

namespace hrc {

struct SearchConfig {
  double c_puct = 100.0;
  int max_depth = 3;  // epochs below the root; 0 = unlimited
  int simulations = 30;
  double noop_prior = 0.001;
  std::uint64_t seed = 0;
};

struct SearchNode;

struct EdgeStats {
  AgentAction action;
  double prior = 0.0;
  int visits = 0;
  double total_value = 0.0;
  Time reward = 0;  // reward of the epoch closed by this decision, else 0
  int epochs = 0;   // 1 when this decision closes an epoch
  std::unique_ptr<SearchNode> child;

  double q() const { return visits > 0 ? total_value / visits : 0.0; }
};

struct SearchNode {
  GameState state;  // an agent is due to decide, unless terminal
  std::vector<EdgeStats> edges;
  bool expanded = false;
  bool evaluated = false;
  double value = 0.0;  // cached evaluation

  explicit SearchNode(GameState s) : state(std::move(s)) {}

  bool terminal() const { return state.is_terminal(); }
  AgentId agent() const { return *state.next_decider(); }

  int visit_total() const {
    int n = 0;
    for (const auto& e : edges) n += e.visits;
    return n;
  }
};

/// Column used for ordering and for the policy vector; NoOp has none.
inline std::optional<int> action_column(const GameState& state, const AgentAction& a) {
  if (a.is_noop()) return std::nullopt;
  return state.spec().tasks[*a.pick].col;
}

namespace detail {

// Tie order: higher prior, then lower column, NoOp last.
inline bool tie_prefers(const GameState& s, const EdgeStats& a, const EdgeStats& b) {
  if (a.prior != b.prior) return a.prior > b.prior;
  auto ca = action_column(s, a.action), cb = action_column(s, b.action);
  if (ca && cb) return *ca < *cb;
  return ca.has_value() && !cb.has_value();
}

/// Applies `action` and advances time if it closes the epoch.
inline GameState step_state(const GameState& from, AgentId agent, const AgentAction& action, Time& reward,
                            int& epochs) {
  GameState next = from;
  next.apply(agent, action);
  reward = 0;
  epochs = 0;
  while (!next.is_terminal() && !next.next_decider()) {
    auto tr = next.advance_time();
    reward += tr.reward;
    ++epochs;
  }
  return next;
}

}  // namespace detail

inline std::size_t select_edge_index(const SearchNode& node, double c) {
  if (node.edges.empty()) throw SearchError("select_edge on a node without edges");
  const double sqrt_total = std::sqrt(static_cast<double>(node.visit_total()));
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < node.edges.size(); ++i) {
    const EdgeStats& e = node.edges[i];
    const double score = e.q() + c * e.prior * sqrt_total / (1.0 + e.visits);
    if (i == 0 || score > best_score ||
        (score == best_score && detail::tie_prefers(node.state, e, node.edges[best]))) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

inline AgentAction select_edge(const SearchNode& node, double c) {
  return node.edges[select_edge_index(node, c)].action;
}

/// Priors from the network's column distribution restricted to legal picks,
/// plus `noop_prior` for NoOp, renormalized to sum to one.
inline std::vector<double> masked_priors(const GameState& state, const std::vector<AgentAction>& actions,
                                         const std::vector<double>& p, double noop_prior) {
  std::vector<double> priors(actions.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].is_noop()) {
      priors[i] = noop_prior;
    } else {
      const auto col = static_cast<std::size_t>(*action_column(state, actions[i]));
      if (col >= p.size()) throw ShapeError("policy head narrower than the board");
      priors[i] = p[col];
    }
    sum += priors[i];
  }
  if (!(sum > 0.0)) {
    for (double& v : priors) v = 1.0 / static_cast<double>(priors.size());
    return priors;
  }
  for (double& v : priors) v /= sum;
  return priors;
}

/// Populates the node's edges and returns its value estimate (0 when terminal).
template <typename Evaluator>
double expand_and_evaluate(SearchNode& node, const Evaluator& net, double noop_prior) {
  node.evaluated = true;
  if (node.terminal()) {
    node.value = 0.0;
    node.expanded = true;
    return 0.0;
  }
  PolicyValue pv = net.evaluate(node.state);
  const AgentId agent = node.agent();
  auto actions = node.state.legal_actions(agent);
  auto priors = masked_priors(node.state, actions, pv.p, noop_prior);
  node.edges.clear();
  node.edges.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    EdgeStats e;
    e.action = actions[i];
    e.prior = priors[i];
    node.edges.push_back(std::move(e));
  }
  node.expanded = true;
  node.value = pv.v;
  return pv.v;
}

template <typename Evaluator>
double evaluate_only(SearchNode& node, const Evaluator& net) {
  if (!node.evaluated) {
    node.value = node.terminal() ? 0.0 : net.evaluate(node.state).v;
    node.evaluated = true;
  }
  return node.value;
}

/// Adds one visit to every edge on the path; edge i receives the rewards of
/// edges i..end plus `leaf_value`.
inline void backup(std::span<EdgeStats* const> path, double leaf_value) {
  double g = leaf_value;
  for (std::size_t i = path.size(); i-- > 0;) {
    g += static_cast<double>(path[i]->reward);
    path[i]->visits += 1;
    path[i]->total_value += g;
  }
}

struct SearchResult {
  std::vector<AgentAction> actions;
  std::vector<double> policy;  // visit distribution, aligned with actions
  std::vector<double> priors;
  AgentAction chosen;
  AgentId agent;

  /// Visit distribution over board columns (NoOp mass dropped, renormalized).
  /// Empty when all mass is on NoOp.
  std::vector<double> column_policy(const GameState& state, int width) const {
    std::vector<double> out(static_cast<std::size_t>(width), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (auto c = action_column(state, actions[i])) {
        out[static_cast<std::size_t>(*c)] += policy[i];
        sum += policy[i];
      }
    }
    if (!(sum > 0.0)) return {};
    for (double& v : out) v /= sum;
    return out;
  }
};

/// Visit distribution and most-visited action at an expanded root
/// (ties: higher prior, then lower column, NoOp last).
inline SearchResult root_result(const SearchNode& root) {
  if (root.edges.empty()) throw SearchError("root has no edges");
  SearchResult r;
  r.agent = root.agent();
  const auto& edges = root.edges;
  int total = 0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    r.actions.push_back(edges[i].action);
    r.priors.push_back(edges[i].prior);
    total += edges[i].visits;
    if (edges[i].visits > edges[best].visits ||
        (edges[i].visits == edges[best].visits && detail::tie_prefers(root.state, edges[i], edges[best]))) {
      best = i;
    }
  }
  r.chosen = edges[best].action;
  r.policy.assign(edges.size(), 0.0);
  if (total == 0) {
    r.policy[best] = 1.0;
  } else {
    for (std::size_t i = 0; i < edges.size(); ++i) r.policy[i] = static_cast<double>(edges[i].visits) / total;
  }
  return r;
}

/// A search tree that persists between decisions.
template <typename Evaluator>
class SearchTree {
 public:
  SearchTree(GameState root, SearchConfig config)
      : root_(std::make_unique<SearchNode>(std::move(root))), config_(config) {
    if (config_.c_puct <= 0.0) throw SearchError("c_puct must be positive");
    if (config_.simulations < 1) throw SearchError("simulations must be at least 1");
    if (config_.max_depth < 0) throw SearchError("max_depth must be >= 0");
  }

  const SearchNode& root() const { return *root_; }
  const SearchConfig& config() const { return config_; }

  SearchResult search(const Evaluator& net) {
    if (root_->terminal()) throw SearchError("search from a terminal state");
    if (!root_->expanded) expand_and_evaluate(*root_, net, config_.noop_prior);
    if (root_->edges.size() > 1) {
      for (int i = 0; i < config_.simulations; ++i) simulate(net);
    }
    return result();
  }

  /// Makes the child reached by `action` the new root; everything else is dropped.
  void advance_root(const AgentAction& action) {
    if (root_->terminal()) throw SearchError("cannot advance past a terminal state");
    const AgentId agent = root_->agent();
    if (!root_->expanded) {
      if (!root_->state.is_legal(agent, action)) throw SearchError("action is not an edge of the root");
      Time reward;
      int epochs;
      root_ = std::make_unique<SearchNode>(detail::step_state(root_->state, agent, action, reward, epochs));
      return;
    }
    for (auto& e : root_->edges) {
      if (!(e.action == action)) continue;
      if (!e.child) ensure_child(*root_, e);
      std::unique_ptr<SearchNode> child = std::move(e.child);
      root_ = std::move(child);
      return;
    }
    throw SearchError("action is not an edge of the root");
  }

 private:
  void ensure_child(SearchNode& parent, EdgeStats& e) {
    e.child = std::make_unique<SearchNode>(
        detail::step_state(parent.state, parent.agent(), e.action, e.reward, e.epochs));
  }

  void simulate(const Evaluator& net) {
    std::vector<EdgeStats*> path;
    SearchNode* node = root_.get();
    int depth = 0;
    const int cap = config_.max_depth;
    double leaf = 0.0;
    while (true) {
      if (node->terminal()) {
        leaf = 0.0;
        break;
      }
      if (cap > 0 && depth >= cap) {
        leaf = evaluate_only(*node, net);
        break;
      }
      if (!node->expanded) {
        leaf = expand_and_evaluate(*node, net, config_.noop_prior);
        break;
      }
      EdgeStats& e = node->edges[select_edge_index(*node, config_.c_puct)];
      if (!e.child) ensure_child(*node, e);
      path.push_back(&e);
      depth += e.epochs;
      node = e.child.get();
    }
    backup(path, leaf);
  }

  SearchResult result() const { return root_result(*root_); }

  std::unique_ptr<SearchNode> root_;
  SearchConfig config_;
};

/// One-shot search from `state` for its next decider.
template <typename Evaluator>
SearchResult search(const GameState& state, const Evaluator& net, const SearchConfig& config) {
  SearchTree<Evaluator> tree(state, config);
  return tree.search(net);
}

/// Uniform prior over columns and zero value.
class UniformEvaluator {
 public:
  explicit UniformEvaluator(int width) : width_(width) {}

  PolicyValue evaluate(const GameState&) const {
    return {std::vector<double>(static_cast<std::size_t>(width_), 1.0 / width_), 0.0};
  }

 private:
  int width_;
};

}  // namespace hrc
