#pragma once

#include <array>
#include <span>

#include "strainflow/rf_frame.hpp"
#include "strainflow/warp.hpp"

namespace strainflow {

// All tunables of the objective. The eight per-term smoothness weights are
// derived from `beta` and fixed scale constants (see derived_weights); the
// global `lambda` and `gamma` scales are applied only when composing the
// total.
struct LossWeights {
  double alpha_data = 0.5;  // robust-penalty exponent, data term
  double alpha_reg = 0.2;   // robust-penalty exponent, smoothness + consistency
  double epsilon = 1e-6;    // robust-penalty floor
  double beta = 0.1;        // lateral/axial weighting ratio
  double lambda = 0.03;     // smoothness scale
  double gamma = 0.05;      // consistency scale
  int window = 3;           // data-loss window side length (odd)

  void validate() const;

  // Term weights in order: first derivatives of w_a along (a, l), first
  // derivatives of w_l along (a, l), then second derivatives: d²a of w_a,
  // mixed of w_a, mixed of w_l, d²l of w_l. Each entry is computed literally
  // from its defining identity so the relations hold bit-exactly:
  //   w0 = 1, w1 = beta·w0, w2 = 0.5·w0, w3 = 0.5·beta·w0,
  //   w4 = 5·w0, w5 = beta·w4, w6 = beta·w4, w7 = 0.5·beta·w4.
  std::array<double, 8> derived_weights() const;
};

struct LossBreakdown {
  double data = 0.0;
  double smoothness = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

// mean over elements of (x² + epsilon)^alpha; empty input -> 0.
double charbonnier(std::span<const double> values, double alpha, double epsilon);
double charbonnier(const RealGrid& values, double alpha, double epsilon);

// Derivative stencils shared by smoothness, consistency and evaluation code:
// central differences at interior samples, one-sided two-point at borders.
// The *_adjoint functions are the exact transposes.
RealGrid diff_axial(const RealGrid& g);
RealGrid diff_lateral(const RealGrid& g);
RealGrid diff_axial_adjoint(const RealGrid& g);
RealGrid diff_lateral_adjoint(const RealGrid& g);

// Windowed robust photometric penalty between i1 and i2 warped by `field`.
double data_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                 const DisplacementField& field, const LossWeights& w);

// Weighted robust penalty on the eight derivative terms of one field; the
// first-derivative axial term of w_a has its spatial mean removed so uniform
// strain is not penalized.
double smoothness_loss(const DisplacementField& field, const LossWeights& w);

// Penalty on the sum of forward and backward strains, which cancels for
// mutually consistent fields: axial term weighted 1, lateral term 0.5·beta.
double consistency_loss(const DisplacementField& forward,
                        const DisplacementField& backward, const LossWeights& w);

// data = mean of the two directional data losses; smoothness = mean over both
// fields; total = data + lambda·smoothness + gamma·consistency.
LossBreakdown total_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                         const BiDisplacement& bi, const LossWeights& w);

struct ValueGrad {
  double value = 0.0;
  FieldGradient grad;
};

struct PairGradient {
  FieldGradient forward;
  FieldGradient backward;
};

struct ValuePairGrad {
  double value = 0.0;
  PairGradient grad;
};

struct TotalLossGradient {
  LossBreakdown value;
  PairGradient grad;
};

ValueGrad data_loss_gradient(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                             const DisplacementField& field, const LossWeights& w);
ValueGrad smoothness_loss_gradient(const DisplacementField& field, const LossWeights& w);
ValuePairGrad consistency_loss_gradient(const DisplacementField& forward,
                                        const DisplacementField& backward,
                                        const LossWeights& w);

// Analytic gradient of the full objective with respect to every displacement
// sample of both fields; validity masks are treated as fixed at the
// evaluation point.
TotalLossGradient total_loss_gradient(const MultiChannelFrame& i1,
                                      const MultiChannelFrame& i2,
                                      const BiDisplacement& bi, const LossWeights& w);

// The eight operator outputs the smoothness penalty is applied to, in
// derived_weights() order (mean already subtracted from the first one).
// Exposed for tests.
std::array<RealGrid, 8> smoothness_term_grids(const DisplacementField& field);

}  // namespace strainflow
