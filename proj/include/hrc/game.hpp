#pragma once

// The multi-agent scheduling game played on the board.
//
// Time advances in decision epochs. At an epoch every idle agent makes one
// micro-decision (pick a bottom-row stone or do nothing), humans first and
// then robots, each class in index order. Once all idle agents have decided,
// time jumps to the next task completion and the reward is minus the elapsed
// time, so the episode return is minus the makespan.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hrc/board.hpp"
#include "hrc/error.hpp"
#include "hrc/jobspec.hpp"

namespace hrc {

enum class AgentClass { Human, Robot };

struct AgentId {
  AgentClass cls = AgentClass::Human;
  int index = 1;  // 1-based within its class

  friend bool operator==(const AgentId&, const AgentId&) = default;
};

inline std::string to_string(AgentId id) {
  return (id.cls == AgentClass::Human ? "H" : "R") + std::to_string(id.index);
}

inline bool can_do(AgentClass cls, TaskKind kind) {
  if (kind == TaskKind::Either) return true;
  return (cls == AgentClass::Human) == (kind == TaskKind::HumanOnly);
}

struct AgentState {
  std::optional<TaskIndex> task;
  Time remaining = 0;

  bool idle() const { return !task.has_value(); }

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct AgentAction {
  std::optional<TaskIndex> pick;

  static AgentAction noop() { return {}; }
  static AgentAction take(TaskIndex task) { return {task}; }

  bool is_noop() const { return !pick.has_value(); }

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

struct GameRules {
  /// A stone in the bottom row is pickable only once all of its geometric
  /// predecessors have completed. When false, a stone is pickable as soon as
  /// it reaches the bottom row.
  bool strict_precedence = true;
  /// Lets an idle agent decline while a task is available to it. By default
  /// doing nothing is offered only when the agent has no legal pick.
  bool allow_wait = false;
};

/// Immutable per-job data shared by every state of a game.
struct Job {
  JobSpec spec;
  PrecedenceMap preds;
  GameRules rules;

  Job(JobSpec s, GameRules r) : spec(std::move(s)), preds(derive_precedence(spec)), rules(r) {}
};

using JobPtr = std::shared_ptr<const Job>;

inline JobPtr make_job(JobSpec spec, GameRules rules = {}) {
  validate_jobspec(spec);
  return std::make_shared<const Job>(std::move(spec), rules);
}

struct TransitionResult;

class GameState {
 public:
  GameState() = default;

  explicit GameState(JobPtr job)
      : job_(std::move(job)),
        board_(job_->spec),
        agents_(static_cast<std::size_t>(job_->spec.humans + job_->spec.robots)),
        acted_(agents_.size(), false),
        start_(job_->spec.size(), -1),
        completed_(job_->spec.size(), false) {}

  const Job& job() const { return *job_; }
  const JobPtr& job_ptr() const { return job_; }
  const JobSpec& spec() const { return job_->spec; }
  const Board& board() const { return board_; }
  Time clock() const { return clock_; }
  int epoch() const { return epoch_; }

  std::size_t agent_count() const { return agents_.size(); }

  AgentId agent_id(std::size_t slot) const {
    int humans = job_->spec.humans;
    if (static_cast<int>(slot) < humans) return {AgentClass::Human, static_cast<int>(slot) + 1};
    return {AgentClass::Robot, static_cast<int>(slot) - humans + 1};
  }

  std::size_t slot_of(AgentId id) const {
    const int limit = id.cls == AgentClass::Human ? job_->spec.humans : job_->spec.robots;
    if (id.index < 1 || id.index > limit) throw IllegalActionError("unknown agent " + to_string(id));
    return static_cast<std::size_t>(id.cls == AgentClass::Human ? id.index - 1
                                                                : job_->spec.humans + id.index - 1);
  }

  const AgentState& agent(AgentId id) const { return agents_[slot_of(id)]; }
  bool has_acted(AgentId id) const { return acted_[slot_of(id)]; }

  bool completed(TaskIndex task) const { return completed_.at(task); }
  std::size_t completed_count() const { return completed_count_; }
  Time start_time(TaskIndex task) const { return start_.at(task); }

  std::size_t busy_count() const {
    std::size_t n = 0;
    for (const AgentState& a : agents_) n += a.idle() ? 0 : 1;
    return n;
  }

  bool is_terminal() const { return completed_count_ == job_->spec.size(); }

  /// The next agent to decide in the current epoch, if any.
  std::optional<AgentId> next_decider() const {
    for (std::size_t s = 0; s < agents_.size(); ++s) {
      if (agents_[s].idle() && !acted_[s]) return agent_id(s);
    }
    return std::nullopt;
  }

  /// Bottom-row tasks the agent could start now, in column order.
  std::vector<TaskIndex> legal_picks(AgentId id) const {
    std::vector<TaskIndex> picks;
    for (TaskIndex x : board_.bottom_row_tasks()) {
      if (!can_do(id.cls, job_->spec.tasks[x].kind)) continue;
      if (job_->rules.strict_precedence && !predecessors_done(x)) continue;
      picks.push_back(x);
    }
    return picks;
  }

  /// Picks first (column order), then NoOp when it is allowed.
  std::vector<AgentAction> legal_actions(AgentId id) const {
    const std::size_t slot = slot_of(id);
    if (!agents_[slot].idle()) throw IllegalActionError("agent " + to_string(id) + " is not idle");
    if (acted_[slot]) throw IllegalActionError("agent " + to_string(id) + " already decided this epoch");

    std::vector<AgentAction> actions;
    for (TaskIndex x : legal_picks(id)) actions.push_back(AgentAction::take(x));
    if (actions.empty() || (job_->rules.allow_wait && wait_keeps_progress(slot))) {
      actions.push_back(AgentAction::noop());
    }
    return actions;
  }

  bool is_legal(AgentId id, const AgentAction& action) const {
    auto actions = legal_actions(id);
    return std::find(actions.begin(), actions.end(), action) != actions.end();
  }

  /// Applies one micro-decision. Picking removes the stone (with gravity) and
  /// starts the task immediately.
  void apply(AgentId id, const AgentAction& action) {
    if (!is_legal(id, action)) {
      throw IllegalActionError("illegal action for " + to_string(id) + ": " +
                               (action.is_noop() ? std::string("noop") : "pick " + job_->spec.tasks[*action.pick].id));
    }
    const std::size_t slot = slot_of(id);
    acted_[slot] = true;
    if (action.is_noop()) return;
    const TaskIndex x = *action.pick;
    board_.remove_and_cascade(x);
    agents_[slot] = {x, job_->spec.tasks[x].duration};
    start_[x] = clock_;
  }

  /// Jumps to the next completion. Requires every idle agent to have decided.
  TransitionResult advance_time();

  friend bool operator==(const GameState& a, const GameState& b) {
    return a.job_ == b.job_ && a.board_ == b.board_ && a.agents_ == b.agents_ && a.acted_ == b.acted_ &&
           a.start_ == b.start_ && a.completed_ == b.completed_ && a.clock_ == b.clock_ &&
           a.epoch_ == b.epoch_;
  }

 private:
  bool predecessors_done(TaskIndex x) const {
    for (TaskIndex p : job_->preds[x]) {
      if (!completed_[p]) return false;
    }
    return true;
  }

  // Declining must not leave the epoch with nobody working: some agent is
  // already busy, or a later undecided agent can still pick.
  bool wait_keeps_progress(std::size_t slot) const {
    if (busy_count() > 0) return true;
    for (std::size_t s = slot + 1; s < agents_.size(); ++s) {
      if (agents_[s].idle() && !acted_[s] && !legal_picks(agent_id(s)).empty()) return true;
    }
    return false;
  }

  JobPtr job_;
  Board board_;
  std::vector<AgentState> agents_;
  std::vector<bool> acted_;
  std::vector<Time> start_;
  std::vector<bool> completed_;
  std::size_t completed_count_ = 0;
  Time clock_ = 0;
  int epoch_ = 0;
};

struct TransitionResult {
  GameState next;
  Time reward = 0;   // always -elapsed
  Time elapsed = 0;
  std::vector<AgentId> freed;
};

inline TransitionResult GameState::advance_time() {
  if (is_terminal()) throw DeadlockError("game is already over");
  if (next_decider()) throw IllegalActionError("epoch still has undecided idle agents");
  if (busy_count() == 0) throw DeadlockError("no agent is busy and tasks remain");
  Time elapsed = -1;
  for (const AgentState& a : agents_) {
    if (!a.idle() && (elapsed < 0 || a.remaining < elapsed)) elapsed = a.remaining;
  }
  TransitionResult result;
  result.elapsed = elapsed;
  result.reward = -elapsed;
  for (std::size_t s = 0; s < agents_.size(); ++s) {
    AgentState& a = agents_[s];
    if (a.idle()) continue;
    a.remaining -= elapsed;
    if (a.remaining == 0) {
      completed_[*a.task] = true;
      ++completed_count_;
      a = {};
      result.freed.push_back(agent_id(s));
    }
  }
  std::fill(acted_.begin(), acted_.end(), false);
  clock_ += elapsed;
  ++epoch_;
  result.next = *this;
  return result;
}

inline GameState initial_state(JobPtr job) { return GameState(std::move(job)); }

inline GameState initial_state(const JobSpec& spec, GameRules rules = {}) {
  return GameState(make_job(spec, rules));
}

inline std::vector<AgentAction> legal_actions(const GameState& state, AgentId agent) {
  return state.legal_actions(agent);
}

inline GameState apply_pick(GameState state, AgentId agent, const AgentAction& action) {
  state.apply(agent, action);
  return state;
}

inline TransitionResult advance_time(GameState state) { return state.advance_time(); }

inline bool is_terminal(const GameState& state) { return state.is_terminal(); }

// ---------------------------------------------------------------------------
// Episodes

struct DecisionRecord {
  GameState state;  // before the decision
  AgentId agent;
  AgentAction action;
  std::vector<double> search_policy;  // per column; empty when not searched
  Time reward_after = 0;              // reward of the epoch this decision closed, else 0
};

struct ScheduleEntry {
  AgentId agent;
  TaskIndex task;
  Time start;
  Time end;
};

struct EpisodeRecord {
  std::vector<DecisionRecord> decisions;
  std::vector<Time> rewards;  // one per epoch transition
  std::vector<ScheduleEntry> schedule;
  Time makespan = 0;
};

/// Folds one decision into the record, keeping the schedule in pick order.
inline void record_decision(EpisodeRecord& record, const GameState& before, AgentId agent,
                            const AgentAction& action, std::vector<double> policy = {}) {
  if (action.pick) {
    Time start = before.clock();
    record.schedule.push_back({agent, *action.pick, start, start + before.spec().tasks[*action.pick].duration});
  }
  record.decisions.push_back({before, agent, action, std::move(policy), 0});
}

inline void record_transition(EpisodeRecord& record, const TransitionResult& tr) {
  record.rewards.push_back(tr.reward);
  if (!record.decisions.empty()) record.decisions.back().reward_after = tr.reward;
}

/// Plays one full episode. `policy(state, agent, legal_actions, rng)` is asked
/// for every micro-decision and must return one of the legal actions.
template <typename Policy>
EpisodeRecord run_episode(const JobPtr& job, Policy&& policy, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GameState state(job);
  EpisodeRecord record;
  while (!state.is_terminal()) {
    if (auto agent = state.next_decider()) {
      auto legal = state.legal_actions(*agent);
      AgentAction action = policy(static_cast<const GameState&>(state), *agent,
                                  static_cast<const std::vector<AgentAction>&>(legal), rng);
      if (std::find(legal.begin(), legal.end(), action) == legal.end()) {
        throw IllegalActionError("policy returned an illegal action for " + to_string(*agent));
      }
      record_decision(record, state, *agent, action);
      state.apply(*agent, action);
    } else {
      record_transition(record, state.advance_time());
    }
  }
  record.makespan = state.clock();
  return record;
}

template <typename Policy>
EpisodeRecord run_episode(const JobSpec& spec, Policy&& policy, std::uint64_t seed, GameRules rules = {}) {
  return run_episode(make_job(spec, rules), std::forward<Policy>(policy), seed);
}

/// Uniform over picks; NoOp only when nothing can be picked.
struct RandomPickPolicy {
  AgentAction operator()(const GameState&, AgentId, const std::vector<AgentAction>& legal,
                         std::mt19937_64& rng) const {
    std::size_t picks = 0;
    for (const auto& a : legal) picks += a.is_noop() ? 0 : 1;
    if (picks == 0) return legal.front();
    std::uniform_int_distribution<std::size_t> dist(0, picks - 1);
    std::size_t k = dist(rng);
    for (const auto& a : legal) {
      if (a.is_noop()) continue;
      if (k-- == 0) return a;
    }
    return legal.front();
  }
};

}  // namespace hrc
