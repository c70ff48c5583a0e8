#pragma once

#include <array>
#include <vector>

#include "strainflow/grid.hpp"
#include "strainflow/rf_frame.hpp"

namespace strainflow {

// Per-sample displacement in sample units. `valid` caches which samples map
// inside the source frame under (a + w_a, l + w_l).
struct DisplacementField {
  RealGrid w_a;
  RealGrid w_l;
  MaskGrid valid;

  static DisplacementField zeros(int rows, int cols);

  int rows() const { return w_a.rows(); }
  int cols() const { return w_a.cols(); }

  // Recomputes `valid`: true where the warped coordinate lies inside
  // [0, rows-1] x [0, cols-1].
  void refresh_validity();
};

struct BiDisplacement {
  DisplacementField forward;
  DisplacementField backward;
};

struct WarpResult {
  RealGrid image;
  MaskGrid valid;
};

// Bilinear sample of `g` at continuous (x, y), which must lie inside
// [0, rows-1] x [0, cols-1]. At integer coordinates the left/upper cell is
// used (documented tie-break), so the value is exact and the one-sided
// derivative in warp_gradient comes from that cell.
double bilinear_at(const RealGrid& g, double x, double y);

// out(a,l) = image sampled at (a + w_a, l + w_l); zero and invalid outside
// the frame.
WarpResult warp_image(const RealGrid& image, const DisplacementField& field);

struct FieldGradient {
  RealGrid w_a;
  RealGrid w_l;

  static FieldGradient zeros(int rows, int cols);
};

// Gradient of sum(upstream * warp_image(image, field)) with respect to the
// two displacement components: upstream times the analytic spatial derivative
// of the bilinear interpolant. Zero on invalid samples.
FieldGradient warp_gradient(const RealGrid& image, const DisplacementField& field,
                            const RealGrid& upstream);

// Windowed residual collection for the data loss. Because the window
// membership relation |center - sample| <= w/2 is symmetric, one grid serves
// two readings: counts(s) is both the number of windows that gather sample s
// and the number of samples gathered by the window centered at s (zero on
// invalid samples / centers).
struct ResidualWindows {
  std::array<RealGrid, 3> residual;  // i1 - i2_warped per channel, 0 where invalid
  Grid<int> counts;
  long long total = 0;  // sum of counts = gathered elements per channel

  // The gathered multiset: channel-major, then row-major, each residual
  // repeated counts(s) times. Test/diagnostic convenience.
  std::vector<double> flatten() const;
};

ResidualWindows windowed_data_residual(const MultiChannelFrame& i1,
                                       const MultiChannelFrame& i2_warped,
                                       const MaskGrid& valid, int window);

}  // namespace strainflow
