#include "strainflow/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "strainflow/signal.hpp"

namespace strainflow {
namespace {

void half_dims(int rows, int cols, int& out_rows, int& out_cols) {
  out_rows = rows / 2;
  out_cols = cols / 2;
}

RealGrid box_down(const RealGrid& g) {
  int r, c;
  half_dims(g.rows(), g.cols(), r, c);
  RealGrid out(r, c);
  for (int a = 0; a < r; ++a)
    for (int l = 0; l < c; ++l)
      out(a, l) = 0.25 * (g(2 * a, 2 * l) + g(2 * a, 2 * l + 1) + g(2 * a + 1, 2 * l) +
                          g(2 * a + 1, 2 * l + 1));
  return out;
}

// Center-aligned source coordinate for target index t: (t + 0.5)·(m/n) − 0.5.
double src_coord(int t, int m, int n) {
  return (t + 0.5) * (static_cast<double>(m) / n) - 0.5;
}

RealGrid bilinear_up(const RealGrid& g, int rows, int cols, double value_scale) {
  RealGrid out(rows, cols);
  const int m_r = g.rows(), m_c = g.cols();
  for (int a = 0; a < rows; ++a) {
    double x = src_coord(a, m_r, rows);
    x = std::min(std::max(x, 0.0), static_cast<double>(m_r - 1));
    for (int l = 0; l < cols; ++l) {
      double y = src_coord(l, m_c, cols);
      y = std::min(std::max(y, 0.0), static_cast<double>(m_c - 1));
      out(a, l) = value_scale * bilinear_at(g, x, y);
    }
  }
  return out;
}

std::array<const RealGrid*, 4> gradient_grids(const PairGradient& g) {
  return {&g.forward.w_a, &g.forward.w_l, &g.backward.w_a, &g.backward.w_l};
}

// Projects a field onto displacements whose warped coordinates stay inside
// the frame. Keeping iterates feasible keeps the validity mask constant, so
// the data term stays continuous along the line search; without this the
// normalization jump from losing a border sample can reject every step size.
void clamp_into_domain(DisplacementField& f) {
  const int rows = f.rows(), cols = f.cols();
  for (int a = 0; a < rows; ++a)
    for (int l = 0; l < cols; ++l) {
      f.w_a(a, l) = std::min(std::max(f.w_a(a, l), static_cast<double>(-a)),
                             static_cast<double>(rows - 1 - a));
      f.w_l(a, l) = std::min(std::max(f.w_l(a, l), static_cast<double>(-l)),
                             static_cast<double>(cols - 1 - l));
    }
  f.refresh_validity();
}

void clamp_into_domain(BiDisplacement& f) {
  clamp_into_domain(f.forward);
  clamp_into_domain(f.backward);
}

// Global transport dictionary: one component grid at a time, shifted by a
// constant or tilted by a unit ramp anchored at index 0. Echo textures carry
// strong periodic self-similarity, so large bulk motions sit behind rows of
// false local minima; comparing whole-field candidates by loss value walks
// through those rows where pointwise gradient steps stall or lock onto the
// wrong lobe. The anchored ramps stay feasible at the anchor row/column.
struct TransportMode {
  int grid;  // 0 f.w_a, 1 f.w_l, 2 b.w_a, 3 b.w_l
  int kind;  // 0 constant, 1 axial ramp, 2 lateral ramp
};

constexpr TransportMode kTransportModes[12] = {
    {0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 2}, {1, 1},
    {2, 0}, {2, 1}, {2, 2}, {3, 0}, {3, 2}, {3, 1},
};

void apply_transport(BiDisplacement& f, const TransportMode& m, double amount) {
  std::array<RealGrid*, 4> grids{&f.forward.w_a, &f.forward.w_l, &f.backward.w_a,
                                 &f.backward.w_l};
  RealGrid& g = *grids[static_cast<std::size_t>(m.grid)];
  const int rows = g.rows(), cols = g.cols();
  for (int a = 0; a < rows; ++a)
    for (int l = 0; l < cols; ++l) {
      double u = 1.0;
      if (m.kind == 1)
        u = a / static_cast<double>(rows - 1);
      else if (m.kind == 2)
        u = l / static_cast<double>(cols - 1);
      g(a, l) += amount * u;
    }
}

}  // namespace

void SolverConfig::validate(int rows, int cols) const {
  weights.validate();
  if (pyramid_levels < 1) throw std::invalid_argument("SolverConfig: pyramid_levels must be >= 1");
  if (iterations_per_level < 1)
    throw std::invalid_argument("SolverConfig: iterations_per_level must be >= 1");
  if (!(base_step > 0.0)) throw std::invalid_argument("SolverConfig: base_step must be positive");
  if (!(moment_decay > 0.0 && moment_decay < 1.0))
    throw std::invalid_argument("SolverConfig: moment_decay must lie in (0, 1)");
  if (!(convergence_tol > 0.0))
    throw std::invalid_argument("SolverConfig: convergence_tol must be positive");
  if (convergence_window < 1)
    throw std::invalid_argument("SolverConfig: convergence_window must be >= 1");
  int r = rows, c = cols;
  for (int lvl = 1; lvl < pyramid_levels; ++lvl) half_dims(r, c, r, c);
  if (r < 8 || c < 8)
    throw std::invalid_argument("SolverConfig: coarsest level would be " + std::to_string(r) +
                                "x" + std::to_string(c) + ", below the 8x8 minimum");
}

MultiChannelFrame downsample_frame(const MultiChannelFrame& frame) {
  int r, c;
  half_dims(frame.rows(), frame.cols(), r, c);
  if (r < 8 || c < 8)
    throw std::invalid_argument("downsample_frame: result would fall below 8x8");
  MultiChannelFrame out;
  out.axial_step = 2.0 * frame.axial_step;
  out.lateral_step = 2.0 * frame.lateral_step;
  for (int ch = 0; ch < 3; ++ch) out.channels[ch] = box_down(frame.channels[ch]);
  return out;
}

DisplacementField upsample_field(const DisplacementField& field, int target_rows,
                                 int target_cols) {
  const int m_r = field.rows(), m_c = field.cols();
  if (target_rows / 2 != m_r || target_cols / 2 != m_c)
    throw std::invalid_argument("upsample_field: target shape is not 2x the source");
  DisplacementField out;
  out.w_a = bilinear_up(field.w_a, target_rows, target_cols, 2.0);
  out.w_l = bilinear_up(field.w_l, target_rows, target_cols, 2.0);
  out.refresh_validity();
  return out;
}

EstimateResult estimate(const RfFrame& i1, const RfFrame& i2, const SolverConfig& config,
                        const std::optional<BiDisplacement>& initial) {
  i1.validate();
  i2.validate();
  if (!i1.samples.same_shape(i2.samples))
    throw std::invalid_argument("estimate: frame shapes differ");
  if (i1.fs != i2.fs || i1.fc != i2.fc || i1.c != i2.c || i1.line_pitch != i2.line_pitch)
    throw std::invalid_argument("estimate: frame metadata differs");
  config.validate(i1.rows(), i1.cols());

  std::vector<MultiChannelFrame> pyr1, pyr2;
  pyr1.push_back(build_channels(i1));
  pyr2.push_back(build_channels(i2));
  for (int lvl = 1; lvl < config.pyramid_levels; ++lvl) {
    pyr1.push_back(downsample_frame(pyr1.back()));
    pyr2.push_back(downsample_frame(pyr2.back()));
  }

  EstimateResult result;
  result.converged = true;

  // Fields at the coarsest level: zero unless an initial field was injected,
  // which is box-averaged and halved down the pyramid.
  BiDisplacement fields;
  {
    const MultiChannelFrame& coarsest = pyr1.back();
    if (initial) {
      if (initial->forward.rows() != i1.rows() || initial->forward.cols() != i1.cols())
        throw std::invalid_argument("estimate: initial field shape differs from the frames");
      BiDisplacement cur = *initial;
      for (int lvl = 1; lvl < config.pyramid_levels; ++lvl) {
        for (RealGrid* g : {&cur.forward.w_a, &cur.forward.w_l, &cur.backward.w_a,
                            &cur.backward.w_l}) {
          RealGrid down = box_down(*g);
          for (double& x : down) x *= 0.5;
          *g = std::move(down);
        }
      }
      cur.forward.refresh_validity();
      cur.backward.refresh_validity();
      fields = std::move(cur);
    } else {
      fields.forward = DisplacementField::zeros(coarsest.rows(), coarsest.cols());
      fields.backward = DisplacementField::zeros(coarsest.rows(), coarsest.cols());
    }
  }

  const double rho = config.moment_decay;
  for (int lvl = config.pyramid_levels - 1; lvl >= 0; --lvl) {
    const MultiChannelFrame& f1 = pyr1[static_cast<std::size_t>(lvl)];
    const MultiChannelFrame& f2 = pyr2[static_cast<std::size_t>(lvl)];
    const int level_index = config.pyramid_levels - 1 - lvl;  // 0 = coarsest
    const int rows = f1.rows(), cols = f1.cols();

    clamp_into_domain(fields);
    LossBreakdown cur = total_loss(f1, f2, fields, config.weights);
    if (!std::isfinite(cur.total))
      throw std::runtime_error("estimate: non-finite loss at level " +
                               std::to_string(level_index) + ", iteration 0");
    result.trace.push_back({level_index, 0, cur});

    std::array<RealGrid, 4> second_moment;
    for (auto& g : second_moment) g = RealGrid(rows, cols);
    int moment_steps = 0;
    double radius = config.base_step;
    bool transporting = true;
    std::vector<double> accepted{cur.total};
    bool level_converged = false;

    for (int iter = 1; iter <= config.iterations_per_level; ++iter) {
      if (transporting) {
        // Probe every transport mode both ways at the current radius and take
        // the lowest-loss candidate; shrink the radius when none improves.
        double best_total = cur.total;
        int best_mode = -1;
        double best_sign = 0.0;
        LossBreakdown best_loss;
        for (int mi = 0; mi < 12; ++mi)
          for (double sign : {+1.0, -1.0}) {
            BiDisplacement cand = fields;
            apply_transport(cand, kTransportModes[mi], sign * radius);
            clamp_into_domain(cand);
            const LossBreakdown probe = total_loss(f1, f2, cand, config.weights);
            if (!std::isfinite(probe.total))
              throw std::runtime_error("estimate: non-finite loss at level " +
                                       std::to_string(level_index) + ", iteration " +
                                       std::to_string(iter));
            if (probe.total < best_total) {
              best_total = probe.total;
              best_mode = mi;
              best_sign = sign;
              best_loss = probe;
            }
          }
        if (best_mode >= 0) {
          apply_transport(fields, kTransportModes[best_mode], best_sign * radius);
          clamp_into_domain(fields);
          cur = best_loss;
        } else {
          radius *= 0.5;
          if (radius < config.base_step / 64.0) transporting = false;
        }
        accepted.push_back(cur.total);
        result.trace.push_back({level_index, iter, cur});
        continue;
      }

      // Detail phase: per-sample step sized by a running second moment of the
      // gradient, with step halving until the total loss is non-increasing.
      TotalLossGradient eg = total_loss_gradient(f1, f2, fields, config.weights);
      if (!std::isfinite(eg.value.total))
        throw std::runtime_error("estimate: non-finite loss at level " +
                                 std::to_string(level_index) + ", iteration " +
                                 std::to_string(iter));
      ++moment_steps;
      const double bias = 1.0 - std::pow(rho, moment_steps);
      std::array<RealGrid, 4> dir;
      const auto grads = gradient_grids(eg.grad);
      for (int k = 0; k < 4; ++k) {
        dir[k] = RealGrid(rows, cols);
        double* vd = second_moment[static_cast<std::size_t>(k)].data();
        const double* gd = grads[static_cast<std::size_t>(k)]->data();
        double* dd = dir[k].data();
        for (std::size_t i = 0; i < dir[k].size(); ++i) {
          vd[i] = rho * vd[i] + (1.0 - rho) * gd[i] * gd[i];
          dd[i] = gd[i] / (std::sqrt(vd[i] / bias) + 1e-8);
        }
      }

      double eta = config.base_step;
      bool stepped = false;
      while (eta >= 1e-10) {
        BiDisplacement cand = fields;
        std::array<RealGrid*, 4> cx{&cand.forward.w_a, &cand.forward.w_l, &cand.backward.w_a,
                                    &cand.backward.w_l};
        for (int k = 0; k < 4; ++k) {
          double* xd = cx[static_cast<std::size_t>(k)]->data();
          const double* dd = dir[k].data();
          for (std::size_t i = 0; i < dir[k].size(); ++i) xd[i] -= eta * dd[i];
        }
        clamp_into_domain(cand);
        const LossBreakdown cand_loss = total_loss(f1, f2, cand, config.weights);
        if (!std::isfinite(cand_loss.total))
          throw std::runtime_error("estimate: non-finite loss at level " +
                                   std::to_string(level_index) + ", iteration " +
                                   std::to_string(iter));
        if (cand_loss.total <= cur.total) {
          fields = std::move(cand);
          cur = cand_loss;
          stepped = true;
          break;
        }
        eta *= 0.5;
      }
      if (!stepped) {
        level_converged = true;  // step rule exhausted: no descent direction left
        break;
      }

      accepted.push_back(cur.total);
      result.trace.push_back({level_index, iter, cur});

      const int wnd = config.convergence_window;
      if (static_cast<int>(accepted.size()) > wnd) {
        const double old_loss = accepted[accepted.size() - 1 - static_cast<std::size_t>(wnd)];
        if ((old_loss - cur.total) < config.convergence_tol * std::abs(old_loss)) {
          level_converged = true;
          break;
        }
      }
    }
    if (!level_converged) result.converged = false;

    if (lvl > 0) {
      const MultiChannelFrame& next = pyr1[static_cast<std::size_t>(lvl - 1)];
      fields.forward = upsample_field(fields.forward, next.rows(), next.cols());
      fields.backward = upsample_field(fields.backward, next.rows(), next.cols());
    }
  }

  result.fields = std::move(fields);
  return result;
}

}  // namespace strainflow
