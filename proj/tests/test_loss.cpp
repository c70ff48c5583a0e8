#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "strainflow/gradcheck.hpp"
#include "strainflow/loss.hpp"
#include "strainflow/phantom.hpp"
#include "strainflow/signal.hpp"

using namespace strainflow;

namespace {

RealGrid random_grid(int rows, int cols, std::uint64_t seed) {
  RealGrid g(rows, cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : g) v = n(rng);
  return g;
}

MultiChannelFrame random_channels(int rows, int cols, std::uint64_t seed) {
  MultiChannelFrame mc;
  mc.channels = {random_grid(rows, cols, seed), random_grid(rows, cols, seed + 100),
                 random_grid(rows, cols, seed + 200)};
  return mc;
}

double dot(const RealGrid& a, const RealGrid& b) {
  double s = 0.0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) s += a(r, c) * b(r, c);
  return s;
}

}  // namespace

TEST_CASE("charbonnier hand values") {
  const std::vector<double> zero{0.0};
  CHECK(charbonnier(zero, 0.5, 1e-6) == doctest::Approx(1e-3).epsilon(1e-12));

  // With a negligible floor the 0.5 exponent is the mean absolute value.
  const std::vector<double> pair{3.0, -4.0};
  CHECK(charbonnier(pair, 0.5, 1e-18) == doctest::Approx(3.5).epsilon(1e-12));

  const std::vector<double> one{1.0};
  CHECK(charbonnier(one, 0.2, 1e-6) ==
        doctest::Approx(std::pow(1.0 + 1e-6, 0.2)).epsilon(1e-12));

  CHECK(charbonnier(std::vector<double>{}, 0.5, 1e-6) == 0.0);
  CHECK_THROWS_AS(
      charbonnier(std::vector<double>{std::numeric_limits<double>::infinity()}, 0.5, 1e-6),
      std::runtime_error);
}

TEST_CASE("derived weights satisfy the defining identities exactly") {
  for (double beta : {0.1, 0.05, 0.3}) {
    LossWeights w;
    w.beta = beta;
    const auto d = w.derived_weights();
    CHECK(d[0] == 1.0);
    CHECK(d[1] == beta * d[0]);
    CHECK(d[2] == 0.5 * d[0]);
    CHECK(d[3] == 0.5 * beta * d[0]);
    CHECK(d[4] == 5.0 * d[0]);
    CHECK(d[5] == beta * d[4]);
    CHECK(d[6] == beta * d[4]);
    CHECK(d[7] == 0.5 * beta * d[4]);
  }
  const auto d = LossWeights{}.derived_weights();
  const std::array<double, 8> expect{1.0, 0.1, 0.5, 0.05, 5.0, 0.5, 0.5, 0.25};
  for (int i = 0; i < 8; ++i) CHECK(d[i] == expect[i]);
}

TEST_CASE("LossWeights validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.window = 4;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w = LossWeights{};
  w.beta = 1.0;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w = LossWeights{};
  w.alpha_data = 1.5;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w = LossWeights{};
  w.lambda = -0.1;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}

TEST_CASE("difference stencils: exact slope on ramps, exact adjoints") {
  RealGrid ramp(7, 6);
  for (int a = 0; a < 7; ++a)
    for (int l = 0; l < 6; ++l) ramp(a, l) = 2.5 * a - 1.25 * l;
  const RealGrid da = diff_axial(ramp);
  const RealGrid dl = diff_lateral(ramp);
  for (double v : da) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
  for (double v : dl) CHECK(v == doctest::Approx(-1.25).epsilon(1e-12));

  // <D g, u> == <g, D^T u> pins the adjoint.
  const RealGrid g = random_grid(9, 8, 21);
  const RealGrid u = random_grid(9, 8, 22);
  CHECK(dot(diff_axial(g), u) == doctest::Approx(dot(g, diff_axial_adjoint(u))).epsilon(1e-12));
  CHECK(dot(diff_lateral(g), u) ==
        doctest::Approx(dot(g, diff_lateral_adjoint(u))).epsilon(1e-12));
}

TEST_CASE("constant field smoothness sits at the penalty floor") {
  DisplacementField f = DisplacementField::zeros(8, 8);
  f.w_a.fill(1.7);
  f.w_l.fill(-0.3);
  const LossWeights w;
  const double floor = 7.9 * std::pow(1e-6, 0.2);  // sum of weights x epsilon^alpha
  CHECK(smoothness_loss(f, w) == doctest::Approx(floor).epsilon(1e-12));
}

TEST_CASE("uniform axial strain is not penalized (mean subtraction)") {
  const LossWeights w;
  const DisplacementField zero = DisplacementField::zeros(10, 9);
  for (double c : {0.01, -0.04, 0.5}) {
    DisplacementField f = DisplacementField::zeros(10, 9);
    for (int a = 0; a < 10; ++a)
      for (int l = 0; l < 9; ++l) f.w_a(a, l) = c * a;
    CHECK(std::abs(smoothness_loss(f, w) - smoothness_loss(zero, w)) < 1e-9);
    // And its gradient vanishes (stationary by symmetry).
    const ValueGrad vg = smoothness_loss_gradient(f, w);
    for (double v : vg.grad.w_a) CHECK(std::abs(v) < 1e-9);
    for (double v : vg.grad.w_l) CHECK(std::abs(v) < 1e-9);
  }
}

TEST_CASE("quadratic field: composed second-difference term") {
  const int n = 10;
  DisplacementField f = DisplacementField::zeros(n, 6);
  for (int a = 0; a < n; ++a)
    for (int l = 0; l < 6; ++l) f.w_a(a, l) = static_cast<double>(a) * a;
  const auto terms = smoothness_term_grids(f);
  // d/da of a^2 is 2a at interior rows, one-sided at the borders; applying
  // the axial stencil again gives exactly 2 away from the two border rows.
  for (int a = 2; a <= n - 3; ++a)
    for (int l = 0; l < 6; ++l) CHECK(terms[4](a, l) == 2.0);
  for (int l = 0; l < 6; ++l) {
    CHECK(terms[4](1, l) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(terms[4](n - 2, l) == doctest::Approx(1.5).epsilon(1e-12));
  }
  // Its weighted contribution is 5 x the per-element Charbonnier mean.
  const LossWeights w;
  const double phi = charbonnier(terms[4], w.alpha_reg, w.epsilon);
  const double interior_elem = std::pow(4.0 + 1e-6, 0.2);
  CHECK(phi > 0.9 * interior_elem * (n - 4.0) / n);
  CHECK(smoothness_loss(f, w) > 5.0 * phi);  // term 4 alone contributes 5 x phi
}

TEST_CASE("smoothness needs at least 3x3") {
  const DisplacementField f = DisplacementField::zeros(2, 8);
  CHECK_THROWS_AS(smoothness_loss(f, LossWeights{}), std::invalid_argument);
}

TEST_CASE("consistency loss floors and direct values") {
  const LossWeights w;
  const double floor = (1.0 + 0.5 * w.beta) * std::pow(w.epsilon, w.alpha_reg);

  DisplacementField fwd = DisplacementField::zeros(8, 8);
  DisplacementField bwd = DisplacementField::zeros(8, 8);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (double& v : fwd.w_a) v = u(rng);
  for (double& v : fwd.w_l) v = u(rng);
  for (int a = 0; a < 8; ++a)
    for (int l = 0; l < 8; ++l) {
      bwd.w_a(a, l) = -fwd.w_a(a, l);
      bwd.w_l(a, l) = -fwd.w_l(a, l);
    }
  // Exactly mirrored fields cancel to the floor.
  CHECK(consistency_loss(fwd, bwd, w) == doctest::Approx(floor).epsilon(1e-12));

  const double s = 0.03;
  DisplacementField ramp = DisplacementField::zeros(8, 8);
  DisplacementField anti = DisplacementField::zeros(8, 8);
  for (int a = 0; a < 8; ++a)
    for (int l = 0; l < 8; ++l) {
      ramp.w_a(a, l) = s * a;
      anti.w_a(a, l) = -s * a;
    }
  CHECK(consistency_loss(ramp, anti, w) == doctest::Approx(floor).epsilon(1e-12));

  // Unmatched ramp: the axial strain sum is s everywhere.
  const DisplacementField zero = DisplacementField::zeros(8, 8);
  const double expect = std::pow(s * s + w.epsilon, w.alpha_reg) +
                        0.5 * w.beta * std::pow(w.epsilon, w.alpha_reg);
  CHECK(consistency_loss(ramp, zero, w) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("data loss floor on identical frames") {
  const MultiChannelFrame mc = random_channels(10, 8, 41);
  const DisplacementField zero = DisplacementField::zeros(10, 8);
  const LossWeights w;
  CHECK(data_loss(mc, mc, zero, w) == doctest::Approx(1e-3).epsilon(1e-12));

  // Residuals at zero have zero penalty slope: the gradient is exactly 0.
  const ValueGrad vg = data_loss_gradient(mc, mc, zero, w);
  for (double v : vg.grad.w_a) CHECK(v == 0.0);
  for (double v : vg.grad.w_l) CHECK(v == 0.0);
}

TEST_CASE("integer shift is recovered exactly by the matching field") {
  const int rows = 12, cols = 8;
  const MultiChannelFrame i1 = random_channels(rows, cols, 43);
  MultiChannelFrame i2 = random_channels(rows, cols, 44);  // rows 0-1 stay noise
  for (int ch = 0; ch < 3; ++ch)
    for (int a = 2; a < rows; ++a)
      for (int l = 0; l < cols; ++l) i2.channels[ch](a, l) = i1.channels[ch](a - 2, l);

  DisplacementField shift = DisplacementField::zeros(rows, cols);
  shift.w_a.fill(2.0);
  shift.refresh_validity();
  const LossWeights w;
  CHECK(data_loss(i1, i2, shift, w) == doctest::Approx(1e-3).epsilon(1e-12));

  const DisplacementField zero = DisplacementField::zeros(rows, cols);
  CHECK(data_loss(i1, i2, zero, w) > data_loss(i1, i2, shift, w));
}

TEST_CASE("data loss rejects a fully invalid field") {
  const MultiChannelFrame mc = random_channels(8, 8, 45);
  DisplacementField f = DisplacementField::zeros(8, 8);
  f.w_a.fill(100.0);
  f.refresh_validity();
  CHECK_THROWS_AS(data_loss(mc, mc, f, LossWeights{}), std::domain_error);
}

TEST_CASE("loss breakdown composition identity") {
  const MultiChannelFrame i1 = random_channels(9, 9, 51);
  const MultiChannelFrame i2 = random_channels(9, 9, 52);
  BiDisplacement bi;
  bi.forward = DisplacementField::zeros(9, 9);
  bi.backward = DisplacementField::zeros(9, 9);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (RealGrid* g : {&bi.forward.w_a, &bi.forward.w_l, &bi.backward.w_a, &bi.backward.w_l})
    for (double& v : *g) v = u(rng);
  bi.forward.refresh_validity();
  bi.backward.refresh_validity();

  const LossWeights w;
  const LossBreakdown b = total_loss(i1, i2, bi, w);
  CHECK(b.total == b.data + w.lambda * b.smoothness + w.gamma * b.consistency);
  CHECK(b.data > 0.0);
  CHECK(b.smoothness > 0.0);
  CHECK(b.consistency > 0.0);

  LossWeights unreg = w;
  unreg.lambda = 0.0;
  unreg.gamma = 0.0;
  const LossBreakdown b0 = total_loss(i1, i2, bi, unreg);
  CHECK(b0.total == b0.data);
}

TEST_CASE("ground-truth fields beat zero fields on a rendered phantom") {
  PhantomSpec spec;
  spec.rows = 128;
  spec.cols = 32;
  spec.background_strain = 0.02;
  spec.seed = 7;
  const PhantomPair pair = render_pair(spec);
  const MultiChannelFrame c1 = build_channels(pair.i1);
  const MultiChannelFrame c2 = build_channels(pair.i2);

  BiDisplacement zero;
  zero.forward = DisplacementField::zeros(128, 32);
  zero.backward = DisplacementField::zeros(128, 32);
  const LossWeights w;
  BiDisplacement truth;
  truth.forward = pair.truth.forward;
  truth.backward = pair.truth.backward;
  const double at_zero = total_loss(c1, c2, zero, w).total;
  const double at_truth = total_loss(c1, c2, truth, w).total;
  CHECK(at_truth < at_zero);
}

TEST_CASE("gradient check passes; perturbed gradient fails") {
  CHECK(gradcheck(0, 16, 12).pass);
  CHECK(gradcheck(1, 16, 12).pass);
  CHECK_FALSE(gradcheck(0, 16, 12, /*perturb=*/true).pass);
  CHECK_THROWS_AS(gradcheck(0, 8, 8), std::invalid_argument);
}

TEST_CASE("gradient is linear in lambda") {
  const MultiChannelFrame i1 = random_channels(10, 10, 61);
  const MultiChannelFrame i2 = random_channels(10, 10, 62);
  BiDisplacement bi;
  bi.forward = DisplacementField::zeros(10, 10);
  bi.backward = DisplacementField::zeros(10, 10);
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (RealGrid* g : {&bi.forward.w_a, &bi.forward.w_l, &bi.backward.w_a, &bi.backward.w_l})
    for (double& v : *g) v = u(rng);
  bi.forward.refresh_validity();
  bi.backward.refresh_validity();

  LossWeights w0, w1, w2;
  w0.lambda = 0.0;
  w1.lambda = 0.03;
  w2.lambda = 0.06;
  const auto g0 = total_loss_gradient(i1, i2, bi, w0);
  const auto g1 = total_loss_gradient(i1, i2, bi, w1);
  const auto g2 = total_loss_gradient(i1, i2, bi, w2);
  for (int a = 0; a < 10; ++a)
    for (int l = 0; l < 10; ++l) {
      const double once = g1.grad.forward.w_a(a, l) - g0.grad.forward.w_a(a, l);
      const double twice = g2.grad.forward.w_a(a, l) - g0.grad.forward.w_a(a, l);
      CHECK(twice == doctest::Approx(2.0 * once).epsilon(1e-10));
    }
}

TEST_CASE("summed strain residual of independent draws: mean 0, variance 2 sigma^2") {
  // Residual model behind the consistency term: the forward strain carries
  // noise N(mu, sigma^2), the backward strain carries independent N(-mu,
  // sigma^2), and the true strains cancel in the sum.
  const double sigma = 0.01, mu = 0.002, gt = 0.005;
  const int n = 1'000'000;
  std::mt19937_64 rng(123);
  std::normal_distribution<double> nf(mu, sigma), nb(-mu, sigma);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ef = gt + nf(rng);
    const double eb = -gt + nb(rng);
    const double s = ef + eb;
    sum += s;
    sum_sq += s * s;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double expect_var = 2.0 * sigma * sigma;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean) < 3.0 * se);
  CHECK(std::abs(var - expect_var) < 0.05 * expect_var);
  // The half-variance model sigma^2/2 is far outside what independent draws
  // produce; keep the observed value on record.
  CHECK(std::abs(var - 0.5 * sigma * sigma) > 0.05 * expect_var);
}
