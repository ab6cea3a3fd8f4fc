#pragma once

// Job definitions: tasks laid out as stones on a width x height grid.
//
// Rows are counted from the bottom (row 0 is the pickable frontier) and
// columns from the left. A task occupies `span` contiguous cells of one row.
// Precedence is never declared; it follows from geometry: the nearest stone
// below each covered column must be finished first.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/error.hpp"

namespace hrc {

using Time = long long;
using TaskIndex = std::size_t;

enum class TaskKind { HumanOnly, RobotOnly, Either };

inline char kind_letter(TaskKind kind) {
  switch (kind) {
    case TaskKind::HumanOnly: return 'H';
    case TaskKind::RobotOnly: return 'R';
    case TaskKind::Either: return 'E';
  }
  return '?';
}

inline std::optional<TaskKind> kind_from_letter(std::string_view token) {
  if (token == "H") return TaskKind::HumanOnly;
  if (token == "R") return TaskKind::RobotOnly;
  if (token == "E") return TaskKind::Either;
  return std::nullopt;
}

struct Task {
  std::string id;
  TaskKind kind = TaskKind::HumanOnly;
  Time duration = 1;
  int col = 0;
  int row = 0;
  int span = 1;

  bool covers(int column) const { return column >= col && column < col + span; }

  friend bool operator==(const Task&, const Task&) = default;
};

struct JobSpec {
  int width = 0;
  int height = 0;
  int humans = 0;
  int robots = 0;
  std::vector<Task> tasks;

  std::size_t size() const { return tasks.size(); }

  std::optional<TaskIndex> find(std::string_view id) const {
    for (TaskIndex i = 0; i < tasks.size(); ++i) {
      if (tasks[i].id == id) return i;
    }
    return std::nullopt;
  }

  friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

/// Direct predecessors per task, by task index, each list sorted ascending.
using PrecedenceMap = std::vector<std::vector<TaskIndex>>;

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

template <typename Int>
Int parse_int(std::string_view token, std::size_t line, const char* what) {
  Int value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw JobSpecError(line, std::string("expected integer ") + what + ", got '" +
                                 std::string(token) + "'");
  }
  return value;
}

inline std::string cell_name(int col, int row) {
  return "(" + std::to_string(col) + "," + std::to_string(row) + ")";
}

}  // namespace detail

/// Checks every JobSpec invariant. `lines[i]`, when given, is the source line
/// of task i and is attached to the error.
inline void validate_jobspec(const JobSpec& spec, const std::vector<std::size_t>& lines = {}) {
  auto line_of = [&](std::size_t i) -> std::size_t { return i < lines.size() ? lines[i] : 0; };

  if (spec.width < 1 || spec.height < 1) {
    throw JobSpecError(0, "board dimensions must be positive");
  }
  if (spec.humans < 0 || spec.robots < 0 || spec.humans + spec.robots < 1) {
    throw JobSpecError(0, "at least one agent is required");
  }
  if (spec.tasks.empty()) throw JobSpecError(0, "job has no tasks");

  std::vector<int> grid(static_cast<std::size_t>(spec.width) * spec.height, -1);
  std::map<std::string, std::size_t, std::less<>> seen;
  for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
    const Task& t = spec.tasks[i];
    if (t.id.empty()) throw JobSpecError(line_of(i), "empty task id");
    if (!seen.emplace(t.id, i).second) {
      throw JobSpecError(line_of(i), "duplicate task id '" + t.id + "'");
    }
    if (t.duration <= 0) throw JobSpecError(line_of(i), "duration of '" + t.id + "' must be positive");
    if (t.span < 1) throw JobSpecError(line_of(i), "span of '" + t.id + "' must be at least 1");
    if (t.col < 0 || t.row < 0 || t.col + t.span > spec.width || t.row >= spec.height) {
      throw JobSpecError(line_of(i), "task '" + t.id + "' is out of bounds");
    }
    for (int c = t.col; c < t.col + t.span; ++c) {
      int& cell = grid[static_cast<std::size_t>(t.row) * spec.width + c];
      if (cell >= 0) {
        throw JobSpecError(line_of(i), "cell overlap at " + detail::cell_name(c, t.row) + " between '" +
                                           spec.tasks[cell].id + "' and '" + t.id + "'");
      }
      cell = static_cast<int>(i);
    }
    if (t.kind == TaskKind::HumanOnly && spec.humans < 1) {
      throw JobSpecError(line_of(i), "no capable agent: human-only task '" + t.id + "' but no humans");
    }
    if (t.kind == TaskKind::RobotOnly && spec.robots < 1) {
      throw JobSpecError(line_of(i), "no capable agent: robot-only task '" + t.id + "' but no robots");
    }
  }

  for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
    const Task& t = spec.tasks[i];
    if (t.row == 0) continue;
    bool supported = false;
    for (int c = t.col; c < t.col + t.span; ++c) {
      supported = supported || grid[static_cast<std::size_t>(t.row - 1) * spec.width + c] >= 0;
    }
    if (!supported) {
      throw JobSpecError(line_of(i), "task '" + t.id + "' floats above empty cells");
    }
  }
}

inline JobSpec parse_jobspec(std::istream& in) {
  JobSpec spec;
  std::vector<std::size_t> lines;
  bool have_board = false;
  bool have_agents = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto f = detail::split_fields(line);
    if (f.empty()) continue;

    if (f[0] == "board") {
      if (have_board) throw JobSpecError(line_no, "duplicate 'board' line");
      if (f.size() != 3) throw JobSpecError(line_no, "expected 'board <w> <h>'");
      spec.width = detail::parse_int<int>(f[1], line_no, "width");
      spec.height = detail::parse_int<int>(f[2], line_no, "height");
      if (spec.width < 1 || spec.height < 1) throw JobSpecError(line_no, "board dimensions must be positive");
      have_board = true;
    } else if (f[0] == "agents") {
      if (!have_board) throw JobSpecError(line_no, "'agents' must follow 'board'");
      if (have_agents) throw JobSpecError(line_no, "duplicate 'agents' line");
      if (f.size() != 3) throw JobSpecError(line_no, "expected 'agents <M> <N>'");
      spec.humans = detail::parse_int<int>(f[1], line_no, "human count");
      spec.robots = detail::parse_int<int>(f[2], line_no, "robot count");
      if (spec.humans < 0 || spec.robots < 0) throw JobSpecError(line_no, "agent counts must be non-negative");
      have_agents = true;
    } else if (f[0] == "task") {
      if (!have_agents) throw JobSpecError(line_no, "'task' must follow 'board' and 'agents'");
      if (f.size() != 7) throw JobSpecError(line_no, "expected 'task <id> <H|R|E> <duration> <col> <row> <span>'");
      Task t;
      t.id = std::string(f[1]);
      auto kind = kind_from_letter(f[2]);
      if (!kind) throw JobSpecError(line_no, "unknown task kind '" + std::string(f[2]) + "'");
      t.kind = *kind;
      t.duration = detail::parse_int<Time>(f[3], line_no, "duration");
      t.col = detail::parse_int<int>(f[4], line_no, "column");
      t.row = detail::parse_int<int>(f[5], line_no, "row");
      t.span = detail::parse_int<int>(f[6], line_no, "span");
      spec.tasks.push_back(std::move(t));
      lines.push_back(line_no);
    } else {
      throw JobSpecError(line_no, "unknown directive '" + std::string(f[0]) + "'");
    }
  }
  if (!have_board) throw JobSpecError(0, "missing 'board' line");
  if (!have_agents) throw JobSpecError(0, "missing 'agents' line");

  validate_jobspec(spec, lines);
  return spec;
}

inline JobSpec parse_jobspec(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_jobspec(in);
}

inline std::string serialize_jobspec(const JobSpec& spec) {
  std::ostringstream out;
  out << "board " << spec.width << ' ' << spec.height << '\n';
  out << "agents " << spec.humans << ' ' << spec.robots << '\n';
  for (const Task& t : spec.tasks) {
    out << "task " << t.id << ' ' << kind_letter(t.kind) << ' ' << t.duration << ' ' << t.col << ' '
        << t.row << ' ' << t.span << '\n';
  }
  return out.str();
}

/// For each task and each column of its span, the stone in the highest row
/// strictly below it in that column is a direct predecessor.
inline PrecedenceMap derive_precedence(const JobSpec& spec) {
  PrecedenceMap preds(spec.tasks.size());
  for (TaskIndex y = 0; y < spec.tasks.size(); ++y) {
    const Task& upper = spec.tasks[y];
    for (int c = upper.col; c < upper.col + upper.span; ++c) {
      std::optional<TaskIndex> nearest;
      for (TaskIndex x = 0; x < spec.tasks.size(); ++x) {
        const Task& lower = spec.tasks[x];
        if (!lower.covers(c) || lower.row >= upper.row) continue;
        if (!nearest || lower.row > spec.tasks[*nearest].row) nearest = x;
      }
      if (nearest) preds[y].push_back(*nearest);
    }
    std::sort(preds[y].begin(), preds[y].end());
    preds[y].erase(std::unique(preds[y].begin(), preds[y].end()), preds[y].end());
  }
  return preds;
}

}  // namespace hrc
