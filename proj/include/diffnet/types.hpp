#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace diffnet {

// Node ids are 0-based everywhere (code, JSON, CSV headers).
using Node = int;
inline constexpr Node kNoParent = -1;

// Discrete time indices are 1-based: a series of length T is observed at
// times 1..T. kNever is the null infection time ("never infected"); it is
// the largest representable value, so ordinary < comparisons against real
// times behave as expected. Never do arithmetic on kNever.
using Time = int;
inline constexpr Time kNever = std::numeric_limits<Time>::max();

inline bool is_infected(Time t) { return t != kNever; }

// Minimal dense row-major grid. Used for link strengths and per-link
// hyperparameters; there is no linear algebra in this codebase.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  T& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  const T& operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  bool operator==(const Grid&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

// One hypothesis about the diffusion process: who infected whom (parent),
// when (time), and how strongly nodes influence each other (strength).
// parent[i] == kNoParent and time[i] == kNever together mean "not infected".
struct InfectionState {
  std::vector<Node> parent;
  std::vector<Time> time;
  Grid<double> strength;  // strength(i, j): influence of j on i; meaningful
                          // only where j is a potential parent of i

  int size() const { return static_cast<int>(parent.size()); }

  static InfectionState never_infected(int n) {
    InfectionState s;
    s.parent.assign(n, kNoParent);
    s.time.assign(n, kNever);
    s.strength = Grid<double>(n, n, 0.0);
    return s;
  }

  bool operator==(const InfectionState&) const = default;
};

// Contiguous time range [first..last]; index is 1-based block position.
struct Block {
  int index = 1;
  Time first = 1;
  Time last = 1;

  int length() const { return last - first + 1; }
  bool contains(Time t) const { return t >= first && t <= last; }
  bool operator==(const Block&) const = default;
};

// Splits [1..horizon] into n_blocks equal blocks of floor(horizon/n_blocks)
// steps; the final block absorbs the remainder.
std::vector<Block> make_blocks(Time horizon, int n_blocks);

// N observed time series of equal length plus the block partition used by
// the online sampler (a single block for batch runs).
struct ObservationSet {
  std::vector<std::vector<double>> series;  // [node][time-1]
  std::vector<Block> blocks;

  int size() const { return static_cast<int>(series.size()); }
  Time horizon() const { return series.empty() ? 0 : static_cast<Time>(series[0].size()); }

  static ObservationSet with_blocks(std::vector<std::vector<double>> series, int n_blocks);
  void validate() const;  // equal lengths, horizon >= 2, blocks partition the horizon
};

// Per-node fixed infection times (e.g. known sources). A clamp beyond the
// current horizon prefix means "not yet infected there".
using ClampMap = std::map<Node, Time>;

inline Time effective_clamp(const ClampMap& clamps, Node i, Time prefix_end) {
  auto it = clamps.find(i);
  if (it == clamps.end()) return kNever;
  return it->second <= prefix_end ? it->second : kNever;
}

inline bool is_clamped(const ClampMap& clamps, Node i) { return clamps.count(i) > 0; }

}  // namespace diffnet
