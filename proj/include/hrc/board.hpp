#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hrc/error.hpp"
#include "hrc/jobspec.hpp"

namespace hrc {

struct Descent {
  TaskIndex task;
  int from_row;
  int to_row;

  friend bool operator==(const Descent&, const Descent&) = default;
};

struct PickOutcome {
  TaskIndex removed;
  std::vector<Descent> descents;  // in application order
};

/// Occupancy grid. Columns and spans are fixed per task; only rows change,
/// and a removed task has no row.
class Board {
 public:
  static constexpr int kEmpty = -1;

  Board() = default;

  explicit Board(const JobSpec& spec)
      : width_(spec.width),
        height_(spec.height),
        cells_(static_cast<std::size_t>(spec.width) * spec.height, kEmpty) {
    cols_.reserve(spec.size());
    spans_.reserve(spec.size());
    rows_.reserve(spec.size());
    for (TaskIndex i = 0; i < spec.size(); ++i) {
      const Task& t = spec.tasks[i];
      cols_.push_back(t.col);
      spans_.push_back(t.span);
      rows_.push_back(t.row);
      for (int c = t.col; c < t.col + t.span; ++c) {
        int& cell = at(c, t.row);
        if (cell != kEmpty) throw BoardError("overlapping stones at " + detail::cell_name(c, t.row));
        cell = static_cast<int>(i);
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t task_count() const { return rows_.size(); }

  /// Task index at (col, row) or nullopt when the cell is empty.
  std::optional<TaskIndex> cell(int col, int row) const {
    int v = at(col, row);
    if (v == kEmpty) return std::nullopt;
    return static_cast<TaskIndex>(v);
  }

  bool on_board(TaskIndex task) const { return task < rows_.size() && rows_[task] >= 0; }
  int row_of(TaskIndex task) const { return rows_.at(task); }
  int col_of(TaskIndex task) const { return cols_.at(task); }
  int span_of(TaskIndex task) const { return spans_.at(task); }

  std::size_t stones() const {
    std::size_t n = 0;
    for (int r : rows_) n += r >= 0 ? 1 : 0;
    return n;
  }

  std::size_t occupied_cells() const {
    std::size_t n = 0;
    for (int v : cells_) n += v != kEmpty ? 1 : 0;
    return n;
  }

  bool empty() const { return stones() == 0; }

  /// Tasks whose row is 0, ordered by leftmost column.
  std::vector<TaskIndex> bottom_row_tasks() const {
    std::vector<TaskIndex> out;
    for (int c = 0; c < width_; ++c) {
      int v = at(c, 0);
      if (v != kEmpty && cols_[v] == c) out.push_back(static_cast<TaskIndex>(v));
    }
    return out;
  }

  bool can_descend(TaskIndex task) const {
    int r = rows_[task];
    if (r <= 0) return false;
    for (int c = cols_[task]; c < cols_[task] + spans_[task]; ++c) {
      if (at(c, r - 1) != kEmpty) return false;
    }
    return true;
  }

  bool is_gravity_fixpoint() const {
    for (TaskIndex t = 0; t < rows_.size(); ++t) {
      if (can_descend(t)) return false;
    }
    return true;
  }

  /// Removes a bottom-row stone, then lets stones fall one row at a time,
  /// scanning rows bottom-up and columns left-to-right, until nothing moves.
  PickOutcome remove_and_cascade(TaskIndex task) {
    if (task >= rows_.size()) throw BoardError("unknown task index " + std::to_string(task));
    if (rows_[task] != 0) throw BoardError("task is not in the bottom row");

    for (int c = cols_[task]; c < cols_[task] + spans_[task]; ++c) at(c, 0) = kEmpty;
    rows_[task] = -1;

    PickOutcome outcome{task, {}};
    bool moved = true;
    while (moved) {
      moved = false;
      for (int r = 1; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
          int v = at(c, r);
          if (v == kEmpty || cols_[v] != c) continue;
          if (!can_descend(static_cast<TaskIndex>(v))) continue;
          move_down(static_cast<TaskIndex>(v));
          outcome.descents.push_back({static_cast<TaskIndex>(v), r, r - 1});
          moved = true;
        }
      }
    }
    return outcome;
  }

  /// One character per cell, top row first: '.' empty, else the kind letter.
  std::string render(const JobSpec& spec) const {
    std::string out;
    out.reserve(static_cast<std::size_t>(height_) * (width_ + 1));
    for (int r = height_ - 1; r >= 0; --r) {
      for (int c = 0; c < width_; ++c) {
        int v = at(c, r);
        out.push_back(v == kEmpty ? '.' : kind_letter(spec.tasks[v].kind));
      }
      out.push_back('\n');
    }
    return out;
  }

  friend bool operator==(const Board&, const Board&) = default;

 private:
  int& at(int col, int row) { return cells_[static_cast<std::size_t>(row) * width_ + col]; }
  int at(int col, int row) const { return cells_[static_cast<std::size_t>(row) * width_ + col]; }

  void move_down(TaskIndex task) {
    int r = rows_[task];
    for (int c = cols_[task]; c < cols_[task] + spans_[task]; ++c) {
      at(c, r) = kEmpty;
      at(c, r - 1) = static_cast<int>(task);
    }
    rows_[task] = r - 1;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<int> cells_;
  std::vector<int> cols_;
  std::vector<int> spans_;
  std::vector<int> rows_;
};

}  // namespace hrc
