#include "strainflow/strain.hpp"

#include <algorithm>
#include <stdexcept>

namespace strainflow {
namespace {

// LSQ slope of f over indices [j1, j2] against the index coordinate.
template <class Fetch>
double window_slope(Fetch&& f, int j1, int j2) {
  const int n = j2 - j1 + 1;
  const double x_mean = 0.5 * (j1 + j2);
  double f_mean = 0.0;
  for (int j = j1; j <= j2; ++j) f_mean += f(j);
  f_mean /= n;
  double num = 0.0, den = 0.0;
  for (int j = j1; j <= j2; ++j) {
    const double dx = j - x_mean;
    num += dx * (f(j) - f_mean);
    den += dx * dx;
  }
  return num / den;
}

// One 1-D line of length n: full centered window where it fits, symmetric
// shrink near borders, two points toward the interior at the edge.
template <class Fetch, class Store>
void line_strain(Fetch&& f, Store&& out, int n, int window_len) {
  const int half_lo = (window_len - 1) / 2;
  const int half_hi = window_len - 1 - half_lo;
  for (int i = 0; i < n; ++i) {
    int j1 = i - half_lo, j2 = i + half_hi;
    if (j1 < 0 || j2 > n - 1) {
      const int r = std::min(i, n - 1 - i);
      if (r >= 1) {
        j1 = i - r;
        j2 = i + r;
      } else if (i == 0) {
        j1 = 0;
        j2 = 1;
      } else {
        j1 = n - 2;
        j2 = n - 1;
      }
    }
    out(i, window_slope(f, j1, j2));
  }
}

}  // namespace

StrainField lsq_strain(const RealGrid& component, int window_len, StrainDirection direction) {
  const int extent =
      direction == StrainDirection::axial ? component.rows() : component.cols();
  if (window_len < 2) throw std::invalid_argument("lsq_strain: window_len must be >= 2");
  if (window_len > extent)
    throw std::invalid_argument("lsq_strain: window longer than the grid extent");

  StrainField s;
  s.window_len = window_len;
  s.direction = direction;
  s.values = RealGrid(component.rows(), component.cols());

  if (direction == StrainDirection::axial) {
    for (int l = 0; l < component.cols(); ++l)
      line_strain([&](int a) { return component(a, l); },
                  [&](int a, double v) { s.values(a, l) = v; }, component.rows(), window_len);
  } else {
    for (int a = 0; a < component.rows(); ++a)
      line_strain([&](int l) { return component(a, l); },
                  [&](int l, double v) { s.values(a, l) = v; }, component.cols(), window_len);
  }
  return s;
}

}  // namespace strainflow
