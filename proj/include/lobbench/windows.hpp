#pragma once

// Sliding feature windows. A window ending at state t stacks the scaled
// feature rows of states t-L+1 .. t (oldest first) into one flat vector of
// L * columns doubles; models consume batches of these as [N, L*columns].

#include <cstring>
#include <vector>

#include "lobbench/common.hpp"
#include "lobbench/scaler.hpp"

namespace lobbench {

// Row-major table of scaled feature rows, one per snapshot.
struct FeatureTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // rows * cols, row-major

  double* row(std::size_t r) { return values.data() + r * cols; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }
};

inline FeatureTable scale_states(const ScalerParams& p, const std::vector<LobState>& states) {
  FeatureTable t;
  t.cols = p.columns_seen;
  t.rows = states.size();
  t.values.resize(t.rows * t.cols);
  std::vector<double> flat(t.cols);
  for (std::size_t r = 0; r < t.rows; ++r) {
    if (4 * states[r].depth() != t.cols) throw DataError("scale_states: depth mismatch");
    flatten(states[r], flat.data());
    transform_row(p, flat.data(), t.row(r));
  }
  return t;
}

inline constexpr std::size_t kWindowLength = 10;

// View over a FeatureTable exposing one window per eligible end position.
// Window i covers table rows [i, i+length); its end state index is
// i + length - 1. A table shorter than the window yields zero windows.
class WindowSet {
public:
  WindowSet(const FeatureTable& table, std::size_t length = kWindowLength)
      : table_(&table), length_(length) {
    if (length_ == 0) throw ConfigError("window length must be positive");
  }

  std::size_t size() const {
    return table_->rows + 1 > length_ ? table_->rows - length_ + 1 : 0;
  }
  std::size_t length() const { return length_; }
  std::size_t width() const { return length_ * table_->cols; }

  // End state index of window i.
  std::size_t end_state(std::size_t i) const { return i + length_ - 1; }
  // Window index whose last row is state t (caller ensures t >= length-1).
  std::size_t index_for_end_state(std::size_t t) const { return t - (length_ - 1); }

  void extract(std::size_t i, double* out) const {
    if (i >= size()) throw DataError("window index out of range");
    std::memcpy(out, table_->row(i), width() * sizeof(double));
  }

  std::vector<double> extract(std::size_t i) const {
    std::vector<double> out(width());
    extract(i, out.data());
    return out;
  }

private:
  const FeatureTable* table_;
  std::size_t length_;
};

// Copy the window ending at state `t` of `table` into `out` (length*cols
// doubles). Shared by training batch assembly and evaluation.
inline void copy_window_ending_at(const FeatureTable& table, std::size_t t, std::size_t length,
                                  double* out) {
  if (t + 1 < length || t >= table.rows) throw DataError("window end state out of range");
  std::memcpy(out, table.row(t + 1 - length), length * table.cols * sizeof(double));
}

}  // namespace lobbench
