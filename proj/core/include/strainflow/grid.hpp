#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace strainflow {

// Dense row-major 2-D grid. Throughout the library the row index `a` runs
// along the axial (depth) direction and the column index `l` along the
// lateral direction, so one A-line is one column.
template <class T>
class Grid {
 public:
  Grid() = default;

  Grid(int rows, int cols, T fill = T{})
      : rows_(rows),
        cols_(cols),
        v_(checked_count(rows, cols), fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  T& operator()(int a, int l) { return v_[idx(a, l)]; }
  const T& operator()(int a, int l) const { return v_[idx(a, l)]; }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }

  auto begin() { return v_.begin(); }
  auto end() { return v_.end(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  bool same_shape(const Grid& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  void fill(T value) { v_.assign(v_.size(), value); }

 private:
  static std::size_t checked_count(int rows, int cols) {
    if (rows < 0 || cols < 0)
      throw std::invalid_argument("Grid: negative dimensions");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  std::size_t idx(int a, int l) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(l);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> v_;
};

using RealGrid = Grid<double>;
using MaskGrid = Grid<std::uint8_t>;

inline bool all_finite(const RealGrid& g) {
  for (double x : g)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double grid_mean(const RealGrid& g) {
  if (g.empty()) return 0.0;
  double s = 0.0;
  for (double x : g) s += x;
  return s / static_cast<double>(g.size());
}

inline double grid_rms(const RealGrid& g) {
  if (g.empty()) return 0.0;
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s / static_cast<double>(g.size()));
}

}  // namespace strainflow
