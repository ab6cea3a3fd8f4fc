#pragma once

// Command-line front end: solve | train | baseline | oracle | advise.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad configuration,
// 3 unreadable or invalid jobspec, 4 unreadable or incompatible checkpoint.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrc/baselines.hpp"
#include "hrc/csv.hpp"
#include "hrc/desk_fixture.hpp"
#include "hrc/selfplay.hpp"

namespace hrc::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kJobspecError = 3, kCheckpointError = 4 };

/// Every option of every command; unused fields are ignored by a command.
struct RunConfig {
  std::string command;
  std::string jobspec;
  std::uint64_t seed = 0;
  int simulations = 30;
  int max_depth = 3;
  double c_puct = 100.0;
  int iterations = 10;
  int episodes = 10;
  std::size_t trajectories = 1000;
  std::uint64_t node_budget = 10'000'000;
  std::string checkpoint;
  std::string out = ".";
  bool literal_gravity = false;
  bool allow_wait = false;
  int temperature_moves = 4;

  SearchConfig search() const {
    SearchConfig s;
    s.c_puct = c_puct;
    s.max_depth = max_depth;
    s.simulations = simulations;
    s.seed = seed;
    return s;
  }

  GameRules rules() const { return {.strict_precedence = !literal_gravity, .allow_wait = allow_wait}; }
};

/// `@desk` names the bundled fixture; anything else is a file path.
inline JobSpec load_jobspec(const std::string& path) {
  if (path == "@desk") return desk_fixture();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JobSpecError(0, "cannot read jobspec '" + path + "'");
  try {
    return parse_jobspec(in);
  } catch (const JobSpecError& e) {
    throw JobSpecError(e.line(), path + ": " + e.what());
  }
}

/// The default 15x8 architecture, grown when the board does not fit.
inline NetConfig net_for(const JobSpec& spec) {
  NetConfig cfg;
  cfg.height = std::max(cfg.height, spec.height);
  cfg.width = std::max(cfg.width, spec.width);
  return cfg;
}

inline Parameters load_or_init(const RunConfig& rc, const JobSpec& spec) {
  if (rc.checkpoint.empty()) return init_parameters(net_for(spec), rc.seed);
  Parameters p = load_checkpoint(rc.checkpoint);
  if (p.config.height < spec.height || p.config.width < spec.width) {
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                          "checkpoint input " + std::to_string(p.config.width) + "x" + std::to_string(p.config.height) +
                              " is smaller than the " + std::to_string(spec.width) + "x" +
                              std::to_string(spec.height) + " board");
  }
  return p;
}

inline std::ofstream open_output(const RunConfig& rc, const std::string& name) {
  std::filesystem::create_directories(rc.out);
  const auto path = std::filesystem::path(rc.out) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

inline int cmd_solve(const RunConfig& rc, std::ostream& out) {
  JobPtr job = make_job(load_jobspec(rc.jobspec), rc.rules());
  const Parameters params = load_or_init(rc, job->spec);
  out << "simulations " << rc.simulations << ", max-depth " << rc.max_depth << ", c-puct " << rc.c_puct << '\n';
  SelfPlayEpisode ep = generate_episode(job, params, rc.search(), rc.seed, 0);
  auto sched = open_output(rc, "schedule.csv");
  write_schedule_csv(sched, ep.record, job->spec);
  auto log = open_output(rc, "episode_log.csv");
  write_episode_log_csv(log, ep.record, job->spec);
  out << "makespan " << ep.record.makespan << '\n';
  return kOk;
}

inline int cmd_train(const RunConfig& rc, std::ostream& out) {
  JobPtr job = make_job(load_jobspec(rc.jobspec), rc.rules());
  TrainingConfig cfg;
  cfg.iterations = rc.iterations;
  cfg.episodes = rc.episodes;
  cfg.temperature_moves = rc.temperature_moves;
  cfg.seed = rc.seed;
  cfg.search = rc.search();
  cfg.net = net_for(job->spec);
  std::optional<Parameters> initial;
  if (!rc.checkpoint.empty()) {
    initial = load_or_init(rc, job->spec);
    cfg.net = initial->config;
  }
  cfg.net.validate();
  TrainingRun run = training_loop(job, cfg, std::move(initial), std::filesystem::path(rc.out));
  for (const auto& r : run.reports) {
    out << "iteration " << r.iteration << ": mean " << format_fixed(r.mean_makespan, 2) << ", best "
        << r.best_makespan << ", greedy " << r.eval_makespan << '\n';
  }
  if (!run.reports.empty()) out << "best makespan " << run.reports.back().best_makespan << '\n';
  return kOk;
}

inline int cmd_baseline(const RunConfig& rc, std::ostream& out) {
  JobPtr job = make_job(load_jobspec(rc.jobspec), rc.rules());
  const SampleStats s = random_rollouts(job, rc.trajectories, rc.seed);
  auto hist = open_output(rc, "histogram.csv");
  write_histogram_csv(hist, s);
  if (s.count() == 0) {
    out << "no trajectories\n";
    return kOk;
  }
  out << "trajectories " << s.count() << ", mean " << format_fixed(s.mean, 4) << ", min " << s.min << ", max "
      << s.max << '\n';
  return kOk;
}

inline int cmd_oracle(const RunConfig& rc, std::ostream& out) {
  JobPtr job = make_job(load_jobspec(rc.jobspec), rc.rules());
  const OracleResult r = exhaustive_search(job, rc.node_budget);
  auto csv = open_output(rc, "oracle.csv");
  write_oracle_csv(csv, r);
  if (r.complete()) {
    const auto n = r.complete_routes();
    out << "optimum " << *r.optimum << ", " << n << (n == 1 ? " route" : " routes") << '\n';
  } else {
    out << "budget exceeded at depth " << r.exceeded_at_depth << " after " << r.total_work << " nodes";
    if (r.optimum) out << " (best complete route so far " << *r.optimum << ")";
    out << '\n';
  }
  return kOk;
}

namespace detail {

inline std::string describe(const JobSpec& spec, const AgentAction& a) {
  return a.is_noop() ? std::string("wait") : "pick " + spec.tasks[*a.pick].id;
}

/// Why `id` cannot be picked by `agent` right now.
inline std::string refusal(const GameState& s, AgentId agent, const std::string& id) {
  const JobSpec& spec = s.spec();
  auto idx = spec.find(id);
  if (!idx) return "there is no task '" + id + "'";
  const TaskIndex x = *idx;
  if (s.completed(x) || !s.board().on_board(x)) return id + " has already been taken";
  if (s.board().row_of(x) != 0) return id + " is not in the bottom row";
  if (!can_do(agent.cls, spec.tasks[x].kind)) {
    return id + (spec.tasks[x].kind == TaskKind::RobotOnly ? " is robot-only" : " is human-only");
  }
  return id + " must wait for the task(s) below it to finish";
}

}  // namespace detail

/// Interactive advisor: the operator types each human decision, the tool
/// answers with the robots' decisions from the same tree search as `solve`.
inline int cmd_advise(const RunConfig& rc, std::istream& in, std::ostream& out) {
  JobPtr job = make_job(load_jobspec(rc.jobspec), rc.rules());
  const Parameters params = load_or_init(rc, job->spec);
  NetworkEvaluator net(params);
  const JobSpec& spec = job->spec;
  GameState state(job);
  SearchTree<NetworkEvaluator> tree(state, rc.search());
  EpisodeRecord record;

  auto flush_schedule = [&] {
    auto sched = open_output(rc, "schedule.csv");
    write_schedule_csv(sched, record, spec);
  };
  auto agent_label = [&](AgentId a) {
    const bool alone = a.cls == AgentClass::Human ? spec.humans == 1 : spec.robots == 1;
    const std::string cls = a.cls == AgentClass::Human ? "human" : "robot";
    return alone ? cls : cls + " " + to_string(a);
  };

  out << state.board().render(spec) << "clock " << state.clock() << '\n';
  while (!state.is_terminal()) {
    const AgentId agent = *state.next_decider();
    const auto legal = state.legal_actions(agent);
    AgentAction action = legal.front();

    if (agent.cls == AgentClass::Robot) {
      action = tree.search(net).chosen;
      out << agent_label(agent) << ": " << detail::describe(spec, action) << '\n';
    } else if (legal.size() == 1 && legal.front().is_noop()) {
      out << agent_label(agent) << ": nothing to pick, waiting\n";
    } else {
      while (true) {
        out << agent_label(agent) << "> " << std::flush;
        std::string line;
        if (!std::getline(in, line)) line = "quit";
        std::istringstream words(line);
        std::string verb, arg;
        words >> verb >> arg;
        if (verb == "quit") {
          flush_schedule();
          out << "stopped at clock " << state.clock() << '\n';
          return kOk;
        }
        if (verb == "wait") {
          if (state.is_legal(agent, AgentAction::noop())) {
            action = AgentAction::noop();
            break;
          }
          out << "cannot wait: a task is available and waiting is off (or would leave nobody working)\n";
          continue;
        }
        if (verb == "pick" && !arg.empty()) {
          auto idx = spec.find(arg);
          if (idx && state.is_legal(agent, AgentAction::take(*idx))) {
            action = AgentAction::take(*idx);
            break;
          }
          out << "cannot pick: " << detail::refusal(state, agent, arg) << '\n';
          continue;
        }
        out << "commands: pick <task>, wait, quit\n";
      }
    }

    record_decision(record, state, agent, action);
    state.apply(agent, action);
    tree.advance_root(action);
    bool advanced = false;
    while (!state.is_terminal() && !state.next_decider()) {
      record_transition(record, state.advance_time());
      advanced = true;
    }
    if (advanced) out << state.board().render(spec) << "clock " << state.clock() << '\n';
  }
  record.makespan = state.clock();
  flush_schedule();
  out << "makespan " << record.makespan << '\n';
  return kOk;
}

inline void add_common(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--jobspec", rc.jobspec, "Job definition file, or @desk for the bundled fixture")->required();
  cmd->add_option("--seed", rc.seed, "Master seed (default: $HRC_SEED or 0)");
  cmd->add_option("--out", rc.out, "Directory for output files")->capture_default_str();
  cmd->add_flag("--literal-gravity", rc.literal_gravity, "A descended stone is pickable before its predecessors finish");
  cmd->add_flag("--allow-wait", rc.allow_wait, "Let an idle agent wait while a task is available");
}

inline void add_search(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--simulations", rc.simulations, "Simulations per decision")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-depth", rc.max_depth, "Search depth in epochs, 0 = unlimited")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--c-puct", rc.c_puct, "Exploration constant")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--checkpoint", rc.checkpoint, "Network checkpoint to load");
}

/// Parses arguments and runs one command. Streams are injectable for tests.
inline int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  if (const char* env = std::getenv("HRC_SEED")) {
    try {
      rc.seed = std::stoull(env);
    } catch (const std::exception&) {
      err << "error: HRC_SEED must be a non-negative integer\n";
      return kConfigError;
    }
  }

  CLI::App app{"Human-robot assembly scheduler"};
  app.require_subcommand(1);
  auto* solve = app.add_subcommand("solve", "Schedule a job with one greedy tree-search episode");
  auto* train = app.add_subcommand("train", "Self-play training; writes checkpoints and training_log.csv");
  auto* baseline = app.add_subcommand("baseline", "Random-rollout makespan histogram");
  auto* oracle = app.add_subcommand("oracle", "Exhaustive search with a node budget");
  auto* advise = app.add_subcommand("advise", "Interactive advice for a human operator");
  for (auto* c : {solve, train, baseline, oracle, advise}) add_common(c, rc);
  for (auto* c : {solve, train, advise}) add_search(c, rc);
  train->add_option("--iterations", rc.iterations, "Training iterations")->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--episodes", rc.episodes, "Self-play episodes per iteration")->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--temperature-moves", rc.temperature_moves, "Sampled decisions per episode")->capture_default_str()->check(CLI::NonNegativeNumber);
  baseline->add_option("--trajectories", rc.trajectories, "Random episodes")->capture_default_str();
  oracle->add_option("--node-budget", rc.node_budget, "Maximum expansions")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (solve->parsed()) return cmd_solve(rc, out);
    if (train->parsed()) return cmd_train(rc, out);
    if (baseline->parsed()) return cmd_baseline(rc, out);
    if (oracle->parsed()) return cmd_oracle(rc, out);
    if (advise->parsed()) return cmd_advise(rc, in, out);
  } catch (const JobSpecError& e) {
    err << "jobspec error: " << e.what() << '\n';
    return kJobspecError;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kCheckpointError;
  } catch (const ShapeError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const SearchError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kConfigError;
}

}  // namespace hrc::cli
