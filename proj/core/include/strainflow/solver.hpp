#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "strainflow/loss.hpp"
#include "strainflow/rf_frame.hpp"
#include "strainflow/warp.hpp"

namespace strainflow {

struct SolverConfig {
  int pyramid_levels = 4;
  int iterations_per_level = 300;
  double base_step = 0.05;        // largest per-sample step, in samples
  double moment_decay = 0.9;      // second-moment EMA decay of the step rule
  double convergence_tol = 1e-6;  // relative loss decrease threshold
  int convergence_window = 20;    // iterations the threshold is measured over
  LossWeights weights;
  std::uint64_t seed = 0;         // reserved for randomized variants; default path is deterministic

  // Throws invalid-config when the pyramid would shrink the given frame
  // below 8x8 or any parameter is out of range.
  void validate(int rows, int cols) const;
};

struct TraceRow {
  int level = 0;      // 0 = coarsest
  int iteration = 0;  // 0 is the initial evaluation at that level
  LossBreakdown loss;
};

struct EstimateResult {
  BiDisplacement fields;
  std::vector<TraceRow> trace;  // accepted iterates only; non-increasing within a level
  bool converged = false;       // every level stopped on tolerance rather than the iteration cap
};

// 2x2 box average per channel (odd trailing row/column dropped); sample
// spacings double.
MultiChannelFrame downsample_frame(const MultiChannelFrame& frame);

// Bilinear, center-aligned interpolation of each component onto the target
// shape, values doubled (displacements are measured in samples of the finer
// grid); validity re-derived. Target dims must be 2x the source, plus at most
// one odd sample.
DisplacementField upsample_field(const DisplacementField& field, int target_rows,
                                 int target_cols);

// Coarse-to-fine minimization of the total loss over both displacement
// fields. Fields start at zero (or at `initial`, given at full resolution)
// on the coarsest level. Each level runs two phases within one iteration
// budget: a transport phase that line-searches constant and tilt offsets of
// each component grid by direct loss comparison (robust to the false local
// minima the periodic echo texture creates under bulk motion), then a detail
// phase of per-sample gradient steps whitened by a running second moment,
// with step halving so the accepted loss never increases. Iterates are
// projected so every warped coordinate stays inside the frame; an initial
// field is likewise clamped on entry.
// Deterministic: equal inputs give bit-identical results.
EstimateResult estimate(const RfFrame& i1, const RfFrame& i2, const SolverConfig& config,
                        const std::optional<BiDisplacement>& initial = std::nullopt);

}  // namespace strainflow
