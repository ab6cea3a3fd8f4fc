#pragma once

// CSV outputs. Headers are fixed; numbers are written with fixed precision so
// identical runs give identical bytes.

#include <cstdio>
#include <ostream>
#include <string>

#include "hrc/baselines.hpp"
#include "hrc/game.hpp"

namespace hrc {

inline constexpr const char* kScheduleHeader = "agent,task,start,end";
inline constexpr const char* kEpisodeLogHeader = "epoch,clock,agent,action,reward";
inline constexpr const char* kTrainingLogHeader = "iteration,episodes,mean_makespan,best_makespan,policy_loss,value_loss";
inline constexpr const char* kHistogramHeader = "makespan,count";
inline constexpr const char* kOracleHeader = "depth,routes,nodes";

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string action_label(const JobSpec& spec, const AgentAction& a) {
  return a.is_noop() ? std::string("noop") : spec.tasks[*a.pick].id;
}

inline void write_schedule_csv(std::ostream& out, const EpisodeRecord& record, const JobSpec& spec) {
  out << kScheduleHeader << '\n';
  for (const auto& e : record.schedule) {
    out << to_string(e.agent) << ',' << spec.tasks[e.task].id << ',' << e.start << ',' << e.end << '\n';
  }
}

inline void write_episode_log_csv(std::ostream& out, const EpisodeRecord& record, const JobSpec& spec) {
  out << kEpisodeLogHeader << '\n';
  for (const auto& d : record.decisions) {
    out << d.state.epoch() << ',' << d.state.clock() << ',' << to_string(d.agent) << ','
        << action_label(spec, d.action) << ',' << d.reward_after << '\n';
  }
}

inline void write_training_log_header(std::ostream& out) { out << kTrainingLogHeader << '\n'; }

inline void write_training_log_row(std::ostream& out, int iteration, int episodes, double mean_makespan,
                                   Time best_makespan, double policy_loss, double value_loss) {
  out << iteration << ',' << episodes << ',' << format_fixed(mean_makespan, 4) << ',' << best_makespan << ','
      << format_fixed(policy_loss, 6) << ',' << format_fixed(value_loss, 6) << '\n';
}

/// Every bin from the minimum to the maximum makespan, empty bins included.
inline void write_histogram_csv(std::ostream& out, const SampleStats& stats) {
  out << kHistogramHeader << '\n';
  if (stats.makespans.empty()) return;
  for (Time m = stats.min; m <= stats.max; ++m) {
    auto it = stats.histogram.find(m);
    out << m << ',' << (it == stats.histogram.end() ? 0 : it->second) << '\n';
  }
}

/// One row per fully enumerated depth; `nodes` is cumulative.
inline void write_oracle_csv(std::ostream& out, const OracleResult& r) {
  out << kOracleHeader << '\n';
  std::uint64_t cumulative = 0;
  for (std::size_t d = 1; d < r.routes.size(); ++d) {
    cumulative += r.routes[d];
    out << d << ',' << r.routes[d] << ',' << cumulative << '\n';
  }
}

}  // namespace hrc
