#pragma once

#include "strainflow/grid.hpp"

namespace strainflow {

enum class StrainDirection { axial, lateral };

struct StrainField {
  RealGrid values;  // dimensionless slope per sample
  int window_len = 2;
  StrainDirection direction = StrainDirection::axial;
};

// Least-squares slope of the displacement component over a centered 1-D
// window of window_len samples along the chosen direction. Near borders the
// window shrinks symmetrically (minimum two points, taken toward the
// interior at the very edge). Exact on affine inputs for every window.
StrainField lsq_strain(const RealGrid& component, int window_len, StrainDirection direction);

}  // namespace strainflow
