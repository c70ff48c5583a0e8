#include "strainflow/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace strainflow {
namespace {

double phi(double x, double alpha, double eps) { return std::pow(x * x + eps, alpha); }

// d/dx (x² + eps)^alpha
double phi_prime(double x, double alpha, double eps) {
  return 2.0 * alpha * x * std::pow(x * x + eps, alpha - 1.0);
}

void axpy(RealGrid& y, double a, const RealGrid& x) {
  double* yd = y.data();
  const double* xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) yd[i] += a * xd[i];
}

RealGrid subtract_mean(const RealGrid& g) {
  RealGrid out = g;
  const double m = grid_mean(g);
  for (double& x : out) x -= m;
  return out;
}

void check_smoothness_dims(const DisplacementField& f) {
  if (f.rows() < 3 || f.cols() < 3)
    throw std::invalid_argument("smoothness_loss: field must be at least 3x3");
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha_data > 0.0 && alpha_data <= 1.0) || !(alpha_reg > 0.0 && alpha_reg <= 1.0))
    throw std::invalid_argument("LossWeights: alpha exponents must lie in (0, 1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("LossWeights: epsilon must be positive");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("LossWeights: beta must lie in (0, 1)");
  if (!(lambda >= 0.0) || !(gamma >= 0.0))
    throw std::invalid_argument("LossWeights: lambda and gamma must be non-negative");
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("LossWeights: window must be odd and positive");
}

std::array<double, 8> LossWeights::derived_weights() const {
  const double w0 = 1.0;
  const double w4 = 5.0 * w0;
  return {w0, beta * w0, 0.5 * w0, 0.5 * beta * w0, w4, beta * w4, beta * w4, 0.5 * beta * w4};
}

double charbonnier(std::span<const double> values, double alpha, double epsilon) {
  if (!(alpha > 0.0 && alpha <= 1.0) || !(epsilon > 0.0))
    throw std::invalid_argument("charbonnier: alpha must lie in (0,1] and epsilon be positive");
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double x : values) {
    if (!std::isfinite(x)) throw std::runtime_error("charbonnier: non-finite input");
    s += phi(x, alpha, epsilon);
  }
  return s / static_cast<double>(values.size());
}

double charbonnier(const RealGrid& values, double alpha, double epsilon) {
  return charbonnier(std::span<const double>(values.data(), values.size()), alpha, epsilon);
}

RealGrid diff_axial(const RealGrid& g) {
  const int n = g.rows(), m = g.cols();
  RealGrid out(n, m);
  if (n < 2) return out;
  for (int l = 0; l < m; ++l) {
    out(0, l) = g(1, l) - g(0, l);
    for (int a = 1; a < n - 1; ++a) out(a, l) = 0.5 * (g(a + 1, l) - g(a - 1, l));
    out(n - 1, l) = g(n - 1, l) - g(n - 2, l);
  }
  return out;
}

RealGrid diff_lateral(const RealGrid& g) {
  const int n = g.rows(), m = g.cols();
  RealGrid out(n, m);
  if (m < 2) return out;
  for (int a = 0; a < n; ++a) {
    out(a, 0) = g(a, 1) - g(a, 0);
    for (int l = 1; l < m - 1; ++l) out(a, l) = 0.5 * (g(a, l + 1) - g(a, l - 1));
    out(a, m - 1) = g(a, m - 1) - g(a, m - 2);
  }
  return out;
}

RealGrid diff_axial_adjoint(const RealGrid& u) {
  const int n = u.rows(), m = u.cols();
  RealGrid out(n, m);
  if (n < 2) return out;
  for (int l = 0; l < m; ++l) {
    out(0, l) -= u(0, l);
    out(1, l) += u(0, l);
    for (int a = 1; a < n - 1; ++a) {
      out(a - 1, l) -= 0.5 * u(a, l);
      out(a + 1, l) += 0.5 * u(a, l);
    }
    out(n - 2, l) -= u(n - 1, l);
    out(n - 1, l) += u(n - 1, l);
  }
  return out;
}

RealGrid diff_lateral_adjoint(const RealGrid& u) {
  const int n = u.rows(), m = u.cols();
  RealGrid out(n, m);
  if (m < 2) return out;
  for (int a = 0; a < n; ++a) {
    out(a, 0) -= u(a, 0);
    out(a, 1) += u(a, 0);
    for (int l = 1; l < m - 1; ++l) {
      out(a, l - 1) -= 0.5 * u(a, l);
      out(a, l + 1) += 0.5 * u(a, l);
    }
    out(a, m - 2) -= u(a, m - 1);
    out(a, m - 1) += u(a, m - 1);
  }
  return out;
}

std::array<RealGrid, 8> smoothness_term_grids(const DisplacementField& field) {
  check_smoothness_dims(field);
  const RealGrid da_wa = diff_axial(field.w_a);
  const RealGrid da_wl = diff_axial(field.w_l);
  return {
      subtract_mean(da_wa),
      diff_lateral(field.w_a),
      da_wl,
      diff_lateral(field.w_l),
      diff_axial(da_wa),
      diff_lateral(da_wa),
      diff_lateral(da_wl),
      diff_lateral(diff_lateral(field.w_l)),
  };
}

double data_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                 const DisplacementField& field, const LossWeights& w) {
  w.validate();
  std::array<RealGrid, 3> warped;
  MaskGrid valid;
  for (int c = 0; c < 3; ++c) {
    WarpResult r = warp_image(i2.channels[c], field);
    warped[c] = std::move(r.image);
    if (c == 0) valid = std::move(r.valid);
  }
  MultiChannelFrame i2w{warped};
  const ResidualWindows rw = windowed_data_residual(i1, i2w, valid, w.window);
  if (rw.total == 0)
    throw std::domain_error("data_loss: no valid samples under this displacement field");

  double s = 0.0;
  for (int c = 0; c < 3; ++c) {
    const RealGrid& res = rw.residual[c];
    for (int a = 0; a < res.rows(); ++a)
      for (int l = 0; l < res.cols(); ++l)
        if (rw.counts(a, l) > 0) s += rw.counts(a, l) * phi(res(a, l), w.alpha_data, w.epsilon);
  }
  return s / (3.0 * static_cast<double>(rw.total));
}

ValueGrad data_loss_gradient(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                             const DisplacementField& field, const LossWeights& w) {
  w.validate();
  std::array<RealGrid, 3> warped;
  MaskGrid valid;
  for (int c = 0; c < 3; ++c) {
    WarpResult r = warp_image(i2.channels[c], field);
    warped[c] = std::move(r.image);
    if (c == 0) valid = std::move(r.valid);
  }
  MultiChannelFrame i2w{warped};
  const ResidualWindows rw = windowed_data_residual(i1, i2w, valid, w.window);
  if (rw.total == 0)
    throw std::domain_error("data_loss: no valid samples under this displacement field");

  const int rows = field.rows(), cols = field.cols();
  const double norm = 3.0 * static_cast<double>(rw.total);
  ValueGrad out;
  out.grad = FieldGradient::zeros(rows, cols);

  double s = 0.0;
  RealGrid upstream(rows, cols);
  for (int c = 0; c < 3; ++c) {
    const RealGrid& res = rw.residual[c];
    for (int a = 0; a < rows; ++a) {
      for (int l = 0; l < cols; ++l) {
        const int n = rw.counts(a, l);
        if (n > 0) {
          s += n * phi(res(a, l), w.alpha_data, w.epsilon);
          // residual = i1 - warp(i2), hence the sign flip into the warp adjoint
          upstream(a, l) = -n * phi_prime(res(a, l), w.alpha_data, w.epsilon) / norm;
        } else {
          upstream(a, l) = 0.0;
        }
      }
    }
    const FieldGradient gc = warp_gradient(i2.channels[c], field, upstream);
    axpy(out.grad.w_a, 1.0, gc.w_a);
    axpy(out.grad.w_l, 1.0, gc.w_l);
  }
  out.value = s / norm;
  return out;
}

double smoothness_loss(const DisplacementField& field, const LossWeights& w) {
  w.validate();
  const std::array<RealGrid, 8> terms = smoothness_term_grids(field);
  const std::array<double, 8> dw = w.derived_weights();
  double s = 0.0;
  for (int k = 0; k < 8; ++k) s += dw[k] * charbonnier(terms[k], w.alpha_reg, w.epsilon);
  return s;
}

ValueGrad smoothness_loss_gradient(const DisplacementField& field, const LossWeights& w) {
  w.validate();
  check_smoothness_dims(field);
  const int rows = field.rows(), cols = field.cols();
  const double inv_m = 1.0 / static_cast<double>(field.w_a.size());
  const std::array<double, 8> dw = w.derived_weights();

  const RealGrid da_wa = diff_axial(field.w_a);
  const RealGrid da_wl = diff_axial(field.w_l);
  const std::array<RealGrid, 8> terms = {
      subtract_mean(da_wa),
      diff_lateral(field.w_a),
      da_wl,
      diff_lateral(field.w_l),
      diff_axial(da_wa),
      diff_lateral(da_wa),
      diff_lateral(da_wl),
      diff_lateral(diff_lateral(field.w_l)),
  };

  ValueGrad out;
  out.grad = FieldGradient::zeros(rows, cols);

  std::array<RealGrid, 8> u;
  for (int k = 0; k < 8; ++k) {
    out.value += dw[k] * charbonnier(terms[k], w.alpha_reg, w.epsilon);
    u[k] = RealGrid(rows, cols);
    for (int a = 0; a < rows; ++a)
      for (int l = 0; l < cols; ++l)
        u[k](a, l) = dw[k] * inv_m * phi_prime(terms[k](a, l), w.alpha_reg, w.epsilon);
  }

  // Pull each penalized term back through the transposed operator chain.
  axpy(out.grad.w_a, 1.0, diff_axial_adjoint(subtract_mean(u[0])));
  axpy(out.grad.w_a, 1.0, diff_lateral_adjoint(u[1]));
  axpy(out.grad.w_l, 1.0, diff_axial_adjoint(u[2]));
  axpy(out.grad.w_l, 1.0, diff_lateral_adjoint(u[3]));
  axpy(out.grad.w_a, 1.0, diff_axial_adjoint(diff_axial_adjoint(u[4])));
  axpy(out.grad.w_a, 1.0, diff_axial_adjoint(diff_lateral_adjoint(u[5])));
  axpy(out.grad.w_l, 1.0, diff_axial_adjoint(diff_lateral_adjoint(u[6])));
  axpy(out.grad.w_l, 1.0, diff_lateral_adjoint(diff_lateral_adjoint(u[7])));
  return out;
}

double consistency_loss(const DisplacementField& forward, const DisplacementField& backward,
                        const LossWeights& w) {
  w.validate();
  if (!forward.w_a.same_shape(backward.w_a))
    throw std::invalid_argument("consistency_loss: field shapes differ");
  RealGrid su = diff_axial(forward.w_a);
  axpy(su, 1.0, diff_axial(backward.w_a));
  RealGrid sv = diff_lateral(forward.w_l);
  axpy(sv, 1.0, diff_lateral(backward.w_l));
  return charbonnier(su, w.alpha_reg, w.epsilon) +
         0.5 * w.beta * charbonnier(sv, w.alpha_reg, w.epsilon);
}

ValuePairGrad consistency_loss_gradient(const DisplacementField& forward,
                                        const DisplacementField& backward,
                                        const LossWeights& w) {
  w.validate();
  if (!forward.w_a.same_shape(backward.w_a))
    throw std::invalid_argument("consistency_loss: field shapes differ");
  const int rows = forward.rows(), cols = forward.cols();
  const double inv_m = 1.0 / static_cast<double>(forward.w_a.size());

  RealGrid su = diff_axial(forward.w_a);
  axpy(su, 1.0, diff_axial(backward.w_a));
  RealGrid sv = diff_lateral(forward.w_l);
  axpy(sv, 1.0, diff_lateral(backward.w_l));

  ValuePairGrad out;
  out.value = charbonnier(su, w.alpha_reg, w.epsilon) +
              0.5 * w.beta * charbonnier(sv, w.alpha_reg, w.epsilon);
  out.grad.forward = FieldGradient::zeros(rows, cols);
  out.grad.backward = FieldGradient::zeros(rows, cols);

  RealGrid gu(rows, cols), gv(rows, cols);
  for (int a = 0; a < rows; ++a) {
    for (int l = 0; l < cols; ++l) {
      gu(a, l) = inv_m * phi_prime(su(a, l), w.alpha_reg, w.epsilon);
      gv(a, l) = 0.5 * w.beta * inv_m * phi_prime(sv(a, l), w.alpha_reg, w.epsilon);
    }
  }
  const RealGrid ga = diff_axial_adjoint(gu);   // same pull-back for both fields
  const RealGrid gl = diff_lateral_adjoint(gv);
  out.grad.forward.w_a = ga;
  out.grad.backward.w_a = ga;
  out.grad.forward.w_l = gl;
  out.grad.backward.w_l = gl;
  return out;
}

LossBreakdown total_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                         const BiDisplacement& bi, const LossWeights& w) {
  LossBreakdown b;
  b.data = 0.5 * (data_loss(i1, i2, bi.forward, w) + data_loss(i2, i1, bi.backward, w));
  b.smoothness = 0.5 * (smoothness_loss(bi.forward, w) + smoothness_loss(bi.backward, w));
  b.consistency = consistency_loss(bi.forward, bi.backward, w);
  b.total = b.data + w.lambda * b.smoothness + w.gamma * b.consistency;
  return b;
}

TotalLossGradient total_loss_gradient(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                                      const BiDisplacement& bi, const LossWeights& w) {
  const ValueGrad df = data_loss_gradient(i1, i2, bi.forward, w);
  const ValueGrad db = data_loss_gradient(i2, i1, bi.backward, w);
  const ValueGrad sf = smoothness_loss_gradient(bi.forward, w);
  const ValueGrad sb = smoothness_loss_gradient(bi.backward, w);
  const ValuePairGrad cs = consistency_loss_gradient(bi.forward, bi.backward, w);

  TotalLossGradient out;
  out.value.data = 0.5 * (df.value + db.value);
  out.value.smoothness = 0.5 * (sf.value + sb.value);
  out.value.consistency = cs.value;
  out.value.total =
      out.value.data + w.lambda * out.value.smoothness + w.gamma * out.value.consistency;

  const int rows = bi.forward.rows(), cols = bi.forward.cols();
  out.grad.forward = FieldGradient::zeros(rows, cols);
  out.grad.backward = FieldGradient::zeros(rows, cols);
  axpy(out.grad.forward.w_a, 0.5, df.grad.w_a);
  axpy(out.grad.forward.w_l, 0.5, df.grad.w_l);
  axpy(out.grad.backward.w_a, 0.5, db.grad.w_a);
  axpy(out.grad.backward.w_l, 0.5, db.grad.w_l);
  axpy(out.grad.forward.w_a, 0.5 * w.lambda, sf.grad.w_a);
  axpy(out.grad.forward.w_l, 0.5 * w.lambda, sf.grad.w_l);
  axpy(out.grad.backward.w_a, 0.5 * w.lambda, sb.grad.w_a);
  axpy(out.grad.backward.w_l, 0.5 * w.lambda, sb.grad.w_l);
  axpy(out.grad.forward.w_a, w.gamma, cs.grad.forward.w_a);
  axpy(out.grad.forward.w_l, w.gamma, cs.grad.forward.w_l);
  axpy(out.grad.backward.w_a, w.gamma, cs.grad.backward.w_a);
  axpy(out.grad.backward.w_l, w.gamma, cs.grad.backward.w_l);
  return out;
}

}  // namespace strainflow
