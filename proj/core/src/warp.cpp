#include "strainflow/warp.hpp"

#include <algorithm>
#include <stdexcept>

namespace strainflow {
namespace {

// Cell origin for continuous coordinate x in [0, n-1]: floor(x), except that
// integer coordinates above 0 use the cell to their left. Keeps the origin in
// [0, n-2] and pins the derivative tie-break.
int cell_origin(double x, int n) {
  int i0 = static_cast<int>(x);
  if (static_cast<double>(i0) == x && i0 > 0) --i0;
  if (i0 > n - 2) i0 = n - 2;
  return i0;
}

bool in_bounds(double x, double y, int rows, int cols) {
  return x >= 0.0 && x <= rows - 1 && y >= 0.0 && y <= cols - 1;
}

void check_field(const DisplacementField& f) {
  if (!f.w_a.same_shape(f.w_l) ||
      f.valid.rows() != f.w_a.rows() || f.valid.cols() != f.w_a.cols())
    throw std::invalid_argument("DisplacementField: component shapes differ");
}

}  // namespace

DisplacementField DisplacementField::zeros(int rows, int cols) {
  DisplacementField f;
  f.w_a = RealGrid(rows, cols);
  f.w_l = RealGrid(rows, cols);
  f.valid = MaskGrid(rows, cols, 1);
  return f;
}

void DisplacementField::refresh_validity() {
  const int r = rows(), c = cols();
  if (valid.rows() != r || valid.cols() != c) valid = MaskGrid(r, c);
  for (int a = 0; a < r; ++a)
    for (int l = 0; l < c; ++l)
      valid(a, l) = in_bounds(a + w_a(a, l), l + w_l(a, l), r, c) ? 1 : 0;
}

double bilinear_at(const RealGrid& g, double x, double y) {
  const int rows = g.rows(), cols = g.cols();
  if (rows == 1 && cols == 1) return g(0, 0);
  if (rows == 1) {
    const int j0 = cell_origin(y, cols);
    const double fy = y - j0;
    return (1.0 - fy) * g(0, j0) + fy * g(0, j0 + 1);
  }
  if (cols == 1) {
    const int i0 = cell_origin(x, rows);
    const double fx = x - i0;
    return (1.0 - fx) * g(i0, 0) + fx * g(i0 + 1, 0);
  }
  const int i0 = cell_origin(x, rows);
  const int j0 = cell_origin(y, cols);
  const double fx = x - i0, fy = y - j0;
  return (1.0 - fx) * (1.0 - fy) * g(i0, j0) + fx * (1.0 - fy) * g(i0 + 1, j0) +
         (1.0 - fx) * fy * g(i0, j0 + 1) + fx * fy * g(i0 + 1, j0 + 1);
}

WarpResult warp_image(const RealGrid& image, const DisplacementField& field) {
  check_field(field);
  if (!image.same_shape(field.w_a))
    throw std::invalid_argument("warp_image: image and field shapes differ");

  const int rows = image.rows(), cols = image.cols();
  WarpResult out{RealGrid(rows, cols), MaskGrid(rows, cols, 0)};
  for (int a = 0; a < rows; ++a) {
    for (int l = 0; l < cols; ++l) {
      const double x = a + field.w_a(a, l);
      const double y = l + field.w_l(a, l);
      if (!in_bounds(x, y, rows, cols)) continue;
      out.image(a, l) = bilinear_at(image, x, y);
      out.valid(a, l) = 1;
    }
  }
  return out;
}

FieldGradient FieldGradient::zeros(int rows, int cols) {
  return FieldGradient{RealGrid(rows, cols), RealGrid(rows, cols)};
}

FieldGradient warp_gradient(const RealGrid& image, const DisplacementField& field,
                            const RealGrid& upstream) {
  check_field(field);
  if (!image.same_shape(field.w_a) || !upstream.same_shape(image))
    throw std::invalid_argument("warp_gradient: shapes differ");

  const int rows = image.rows(), cols = image.cols();
  FieldGradient g = FieldGradient::zeros(rows, cols);
  if (rows < 2 || cols < 2) return g;

  for (int a = 0; a < rows; ++a) {
    for (int l = 0; l < cols; ++l) {
      const double x = a + field.w_a(a, l);
      const double y = l + field.w_l(a, l);
      if (!in_bounds(x, y, rows, cols)) continue;
      const int i0 = cell_origin(x, rows);
      const int j0 = cell_origin(y, cols);
      const double fx = x - i0, fy = y - j0;
      const double u = upstream(a, l);
      g.w_a(a, l) = u * ((1.0 - fy) * (image(i0 + 1, j0) - image(i0, j0)) +
                         fy * (image(i0 + 1, j0 + 1) - image(i0, j0 + 1)));
      g.w_l(a, l) = u * ((1.0 - fx) * (image(i0, j0 + 1) - image(i0, j0)) +
                         fx * (image(i0 + 1, j0 + 1) - image(i0 + 1, j0)));
    }
  }
  return g;
}

std::vector<double> ResidualWindows::flatten() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(3 * total));
  for (const RealGrid& ch : residual)
    for (int a = 0; a < ch.rows(); ++a)
      for (int l = 0; l < ch.cols(); ++l)
        for (int k = 0; k < counts(a, l); ++k) out.push_back(ch(a, l));
  return out;
}

ResidualWindows windowed_data_residual(const MultiChannelFrame& i1,
                                       const MultiChannelFrame& i2_warped,
                                       const MaskGrid& valid, int window) {
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("windowed_data_residual: window must be odd and positive");
  const int rows = i1.rows(), cols = i1.cols();
  for (int c = 0; c < 3; ++c)
    if (!i1.channels[c].same_shape(i2_warped.channels[c]) ||
        i1.channels[c].rows() != rows || i1.channels[c].cols() != cols)
      throw std::invalid_argument("windowed_data_residual: channel shapes differ");
  if (valid.rows() != rows || valid.cols() != cols)
    throw std::invalid_argument("windowed_data_residual: mask shape differs");

  ResidualWindows out;
  out.counts = Grid<int>(rows, cols, 0);
  const int half = window / 2;
  for (int a = 0; a < rows; ++a) {
    for (int l = 0; l < cols; ++l) {
      if (!valid(a, l)) continue;
      int n = 0;
      const int a1 = std::max(0, a - half), a2 = std::min(rows - 1, a + half);
      const int l1 = std::max(0, l - half), l2 = std::min(cols - 1, l + half);
      for (int aa = a1; aa <= a2; ++aa)
        for (int ll = l1; ll <= l2; ++ll)
          if (valid(aa, ll)) ++n;
      out.counts(a, l) = n;
      out.total += n;
    }
  }

  for (int c = 0; c < 3; ++c) {
    out.residual[c] = RealGrid(rows, cols);
    for (int a = 0; a < rows; ++a)
      for (int l = 0; l < cols; ++l)
        if (valid(a, l))
          out.residual[c](a, l) = i1.channels[c](a, l) - i2_warped.channels[c](a, l);
  }
  return out;
}

}  // namespace strainflow
