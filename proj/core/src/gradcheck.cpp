#include "strainflow/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>

#include "strainflow/loss.hpp"

namespace strainflow {
namespace {

constexpr double kStep = 1e-5;

double max_abs(const RealGrid& g) {
  double m = 0.0;
  for (double x : g) m = std::max(m, std::abs(x));
  return m;
}

// Central finite differences of `eval` with respect to every sample of every
// grid in `params`, compared against the matching analytic grids.
double fd_rel_error(const std::vector<RealGrid*>& params,
                    const std::vector<const RealGrid*>& analytic,
                    const std::function<double()>& eval) {
  double denom = 1e-12;
  for (const RealGrid* g : analytic) denom = std::max(denom, max_abs(*g));
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    RealGrid& g = *params[p];
    const RealGrid& ga = *analytic[p];
    for (int a = 0; a < g.rows(); ++a) {
      for (int l = 0; l < g.cols(); ++l) {
        const double saved = g(a, l);
        g(a, l) = saved + kStep;
        const double hi = eval();
        g(a, l) = saved - kStep;
        const double lo = eval();
        g(a, l) = saved;
        const double fd = (hi - lo) / (2.0 * kStep);
        worst = std::max(worst, std::abs(ga(a, l) - fd) / denom);
      }
    }
  }
  return worst;
}

}  // namespace

std::string GradCheckReport::text() const {
  std::string out;
  char buf[128];
  for (const GradCheckTerm& t : terms) {
    std::snprintf(buf, sizeof buf, "%-20s max_rel_err = %.6e\n", t.name.c_str(),
                  t.max_rel_error);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "result: %s (tolerance %.1e)\n", pass ? "PASS" : "FAIL",
                tolerance);
  out += buf;
  return out;
}

GradCheckReport gradcheck(std::uint64_t seed, int rows, int cols, bool perturb,
                          double tolerance) {
  if (rows < 12 || cols < 12)
    throw std::invalid_argument("gradcheck: dimensions must be at least 12x12");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.05, 0.45);

  MultiChannelFrame i1, i2;
  for (RealGrid* g : {&i1.channels[0], &i1.channels[1], &i1.channels[2], &i2.channels[0],
                      &i2.channels[1], &i2.channels[2]}) {
    *g = RealGrid(rows, cols);
    for (double& x : *g) x = noise(rng);
  }

  BiDisplacement bi;
  for (DisplacementField* f : {&bi.forward, &bi.backward}) {
    *f = DisplacementField::zeros(rows, cols);
    for (RealGrid* g : {&f->w_a, &f->w_l})
      for (double& x : *g) x = (rng() & 1 ? 1.0 : -1.0) * mag(rng);
    f->refresh_validity();
  }

  const LossWeights w;
  GradCheckReport report;
  report.tolerance = tolerance;

  const auto inject = [&](FieldGradient& g) {
    if (perturb) g.w_a(0, 0) += 1e-2 * (1.0 + std::abs(g.w_a(0, 0)));
  };
  const auto add_term = [&](const std::string& name, double err) {
    report.terms.push_back({name, err});
  };

  {
    ValueGrad vg = data_loss_gradient(i1, i2, bi.forward, w);
    inject(vg.grad);
    add_term("data_forward",
             fd_rel_error({&bi.forward.w_a, &bi.forward.w_l}, {&vg.grad.w_a, &vg.grad.w_l},
                          [&] { return data_loss(i1, i2, bi.forward, w); }));
  }
  {
    ValueGrad vg = data_loss_gradient(i2, i1, bi.backward, w);
    inject(vg.grad);
    add_term("data_backward",
             fd_rel_error({&bi.backward.w_a, &bi.backward.w_l},
                          {&vg.grad.w_a, &vg.grad.w_l},
                          [&] { return data_loss(i2, i1, bi.backward, w); }));
  }
  {
    ValueGrad vg = smoothness_loss_gradient(bi.forward, w);
    inject(vg.grad);
    add_term("smoothness_forward",
             fd_rel_error({&bi.forward.w_a, &bi.forward.w_l}, {&vg.grad.w_a, &vg.grad.w_l},
                          [&] { return smoothness_loss(bi.forward, w); }));
  }
  {
    ValueGrad vg = smoothness_loss_gradient(bi.backward, w);
    inject(vg.grad);
    add_term("smoothness_backward",
             fd_rel_error({&bi.backward.w_a, &bi.backward.w_l},
                          {&vg.grad.w_a, &vg.grad.w_l},
                          [&] { return smoothness_loss(bi.backward, w); }));
  }
  {
    ValuePairGrad vg = consistency_loss_gradient(bi.forward, bi.backward, w);
    inject(vg.grad.forward);
    add_term("consistency",
             fd_rel_error({&bi.forward.w_a, &bi.forward.w_l, &bi.backward.w_a,
                           &bi.backward.w_l},
                          {&vg.grad.forward.w_a, &vg.grad.forward.w_l,
                           &vg.grad.backward.w_a, &vg.grad.backward.w_l},
                          [&] { return consistency_loss(bi.forward, bi.backward, w); }));
  }
  {
    TotalLossGradient vg = total_loss_gradient(i1, i2, bi, w);
    inject(vg.grad.forward);
    add_term("total",
             fd_rel_error({&bi.forward.w_a, &bi.forward.w_l, &bi.backward.w_a,
                           &bi.backward.w_l},
                          {&vg.grad.forward.w_a, &vg.grad.forward.w_l,
                           &vg.grad.backward.w_a, &vg.grad.backward.w_l},
                          [&] { return total_loss(i1, i2, bi, w).total; }));
  }

  report.pass = std::all_of(report.terms.begin(), report.terms.end(),
                            [&](const GradCheckTerm& t) { return t.max_rel_error < tolerance; });
  return report;
}

}  // namespace strainflow
