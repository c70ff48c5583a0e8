#pragma once

#include <optional>
#include <vector>

#include "strainflow/grid.hpp"
#include "strainflow/stats.hpp"

namespace strainflow {

struct Rect {
  int a0 = 0;
  int l0 = 0;
  int height = 0;
  int width = 0;
};

struct MetricWindows {
  Rect target;
  Rect background;
  int patch = 9;
  int stride = 4;

  void validate(int rows, int cols) const;
};

struct MetricReport {
  std::vector<double> cnr_values;
  std::vector<double> sr_values;
  double cnr_mean = 0.0, cnr_std = 0.0;
  double sr_mean = 0.0, sr_std = 0.0;
  int cnr_degenerate = 0;  // patch pairs with zero variance in both patches
  int sr_degenerate = 0;   // patch pairs with zero background mean
  std::optional<double> ssim;
  std::optional<FriedmanResult> friedman;
};

// sqrt(2 (bg_mean - target_mean)^2 / (bg_std^2 + target_std^2))
double cnr(double target_mean, double target_std, double bg_mean, double bg_std);

// target_mean / bg_mean (unitless; CLI reports it as a percentage)
double sr(double target_mean, double bg_mean);

// Enumerates patch positions on the stride grid inside both rectangles
// (row-major, target outer) and fills per-pair CNR/SR arrays plus summary
// statistics. Degenerate pairs are counted, not errors.
MetricReport patch_sweep(const RealGrid& strain, const MetricWindows& windows);

// Single-scale SSIM with the standard 11x11 Gaussian window (sigma 1.5),
// C1=(0.01 L)^2, C2=(0.03 L)^2 where L is the joint dynamic range; mean over
// all fully-covered window positions. Identical constants give 1.0.
double ssim(const RealGrid& a, const RealGrid& b);

}  // namespace strainflow
