#pragma once

// Self-play policy iteration: play episodes with tree search, keep
// (board, visit distribution, remaining time) examples, fit the network to
// them, repeat with the improved network.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hrc/csv.hpp"
#include "hrc/game.hpp"
#include "hrc/net.hpp"
#include "hrc/search.hpp"

namespace hrc {

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  void push(TrainingExample ex) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(ex));
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const TrainingExample& operator[](std::size_t i) const { return items_[i]; }

 private:
  std::size_t capacity_;
  std::deque<TrainingExample> items_;
};

struct SelfPlayEpisode {
  EpisodeRecord record;
  std::vector<TrainingExample> examples;
};

/// Plays one episode with a persistent search tree. The first
/// `temperature_moves` searched decisions sample from the visit distribution,
/// later ones take the most visited action.
template <typename Evaluator>
SelfPlayEpisode generate_episode(const JobPtr& job, const Evaluator& net, int policy_width,
                                 const SearchConfig& config, std::uint64_t seed, int temperature_moves,
                                 int input_height = 15) {
  std::mt19937_64 rng(seed);
  GameState state(job);
  SearchTree<Evaluator> tree(state, config);
  SelfPlayEpisode out;
  std::vector<Time> example_clock;
  int searched = 0;

  while (!state.is_terminal()) {
    const AgentId agent = *state.next_decider();
    const auto legal = state.legal_actions(agent);
    AgentAction action = legal.front();
    std::vector<double> column_policy;
    if (legal.size() == 1) {
      if (auto c = action_column(state, action)) {
        column_policy.assign(static_cast<std::size_t>(policy_width), 0.0);
        column_policy[static_cast<std::size_t>(*c)] = 1.0;
      }
    } else {
      SearchResult res = tree.search(net);
      column_policy = res.column_policy(state, policy_width);
      if (searched < temperature_moves) {
        std::discrete_distribution<std::size_t> pick(res.policy.begin(), res.policy.end());
        action = res.actions[pick(rng)];
      } else {
        action = res.chosen;
      }
      ++searched;
    }

    if (!column_policy.empty()) {
      out.examples.push_back({encode_state(state, input_height, policy_width), column_policy, 0.0});
      example_clock.push_back(state.clock());
    }
    record_decision(out.record, state, agent, action, std::move(column_policy));
    state.apply(agent, action);
    tree.advance_root(action);
    while (!state.is_terminal() && !state.next_decider()) record_transition(out.record, state.advance_time());
  }
  out.record.makespan = state.clock();
  for (std::size_t i = 0; i < out.examples.size(); ++i) {
    out.examples[i].z = -static_cast<double>(out.record.makespan - example_clock[i]);
  }
  return out;
}

inline SelfPlayEpisode generate_episode(const JobPtr& job, const Parameters& params, const SearchConfig& config,
                                        std::uint64_t seed, int temperature_moves) {
  NetworkEvaluator net(params);
  return generate_episode(job, net, params.config.width, config, seed, temperature_moves, params.config.height);
}

struct TrainConfig {
  int epochs = 5;
  int batch_size = 32;
  double lr = 0.01;
  double momentum = 0.9;
  double l2 = 1e-4;
  // Value targets are raw time-units, so early gradients are large enough to
  // kill every ReLU in one step at lr 0.01 without a norm cap.
  double grad_clip = 5.0;
};

struct TrainOutcome {
  Parameters params;
  LossBreakdown losses;  // over the whole buffer, after training
};

inline LossBreakdown buffer_loss(const Parameters& params, const ReplayBuffer& buffer, double l2) {
  std::vector<TrainingExample> all;
  all.reserve(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) all.push_back(buffer[i]);
  return loss(params, all, l2);
}

/// Seeded shuffling, then `epochs` passes of minibatch momentum SGD on
/// norm-clipped gradients.
inline TrainOutcome train_iteration(const ReplayBuffer& buffer, Parameters params, const TrainConfig& cfg,
                                    std::uint64_t seed) {
  if (buffer.empty()) throw Error("cannot train on an empty replay buffer");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Parameters velocity = Parameters::zeros(params.config);
  const auto batch = static_cast<std::size_t>(std::max(cfg.batch_size, 1));
  std::vector<TrainingExample> mb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      mb.clear();
      for (std::size_t j = start; j < std::min(order.size(), start + batch); ++j) mb.push_back(buffer[order[j]]);
      Parameters g = gradients(params, mb, cfg.l2);
      clip_gradient(g, cfg.grad_clip);
      params = sgd_step(params, g, cfg.lr, cfg.momentum, velocity);
    }
  }
  LossBreakdown losses = buffer_loss(params, buffer, cfg.l2);
  return {std::move(params), losses};
}

struct IterationReport {
  int iteration = 0;
  int episodes = 0;
  double mean_makespan = 0.0;
  Time best_makespan = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  Time eval_makespan = 0;
};

struct TrainingConfig {
  int iterations = 10;
  int episodes = 10;
  int temperature_moves = 4;
  std::size_t buffer_capacity = 5000;
  std::uint64_t seed = 0;
  SearchConfig search;
  TrainConfig train;
  NetConfig net;
};

struct TrainingRun {
  std::vector<IterationReport> reports;
  Parameters params;
};

/// Episode `e` of iteration `k` is seeded with seed * 1000003 + k * 1009 + e.
inline std::uint64_t episode_seed(std::uint64_t master, std::uint64_t iteration, std::uint64_t episode) {
  return master * 1000003ULL + iteration * 1009ULL + episode;
}

inline std::string checkpoint_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "checkpoint_%03d.txt", iteration);
  return buf;
}

/// Runs the full pipeline. With `out_dir`, writes checkpoint_000.txt (initial
/// parameters), one checkpoint per iteration and training_log.csv.
inline TrainingRun training_loop(const JobPtr& job, const TrainingConfig& cfg,
                                 std::optional<Parameters> initial = std::nullopt,
                                 const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  TrainingRun run;
  run.params = initial ? std::move(*initial) : init_parameters(cfg.net, cfg.seed);
  ReplayBuffer buffer(cfg.buffer_capacity);
  Time best = std::numeric_limits<Time>::max();

  std::ofstream log;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    save_checkpoint(run.params, (*out_dir / checkpoint_name(0)).string());
    log.open(*out_dir / "training_log.csv", std::ios::binary);
    if (!log) throw Error("cannot write " + (*out_dir / "training_log.csv").string());
    write_training_log_header(log);
  }

  for (int k = 1; k <= cfg.iterations; ++k) {
    const auto ku = static_cast<std::uint64_t>(k);
    double sum = 0.0;
    for (int e = 0; e < cfg.episodes; ++e) {
      auto ep = generate_episode(job, run.params, cfg.search, episode_seed(cfg.seed, ku, static_cast<std::uint64_t>(e)),
                                 cfg.temperature_moves);
      sum += static_cast<double>(ep.record.makespan);
      best = std::min(best, ep.record.makespan);
      for (auto& ex : ep.examples) buffer.push(std::move(ex));
    }

    IterationReport rep;
    rep.iteration = k;
    rep.episodes = cfg.episodes;
    rep.mean_makespan = cfg.episodes > 0 ? sum / cfg.episodes : 0.0;
    if (!buffer.empty()) {
      auto trained = train_iteration(buffer, run.params, cfg.train,
                                     episode_seed(cfg.seed, ku, static_cast<std::uint64_t>(cfg.episodes) + 1));
      run.params = std::move(trained.params);
      rep.policy_loss = trained.losses.policy;
      rep.value_loss = trained.losses.value;
    }
    auto eval = generate_episode(job, run.params, cfg.search,
                                 episode_seed(cfg.seed, ku, static_cast<std::uint64_t>(cfg.episodes)), 0);
    rep.eval_makespan = eval.record.makespan;
    best = std::min(best, eval.record.makespan);
    rep.best_makespan = best;
    run.reports.push_back(rep);

    if (out_dir) {
      save_checkpoint(run.params, (*out_dir / checkpoint_name(k)).string());
      write_training_log_row(log, rep.iteration, rep.episodes, rep.mean_makespan, rep.best_makespan,
                             rep.policy_loss, rep.value_loss);
      log.flush();
    }
  }
  return run;
}

}  // namespace hrc
