#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "strainflow/warp.hpp"

using namespace strainflow;

namespace {

RealGrid ramp_axial(int rows, int cols) {
  RealGrid g(rows, cols);
  for (int a = 0; a < rows; ++a)
    for (int l = 0; l < cols; ++l) g(a, l) = static_cast<double>(a);
  return g;
}

RealGrid random_grid(int rows, int cols, std::uint64_t seed) {
  RealGrid g(rows, cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : g) v = n(rng);
  return g;
}

MultiChannelFrame wrap_channels(const RealGrid& g) {
  MultiChannelFrame mc;
  mc.channels = {g, g, g};
  return mc;
}

}  // namespace

TEST_CASE("bilinear_at interpolates exactly inside a cell") {
  RealGrid g(2, 2);
  g(0, 0) = 1.0;
  g(0, 1) = 2.0;
  g(1, 0) = 3.0;
  g(1, 1) = 4.0;
  CHECK(bilinear_at(g, 0.0, 0.0) == 1.0);
  CHECK(bilinear_at(g, 1.0, 1.0) == 4.0);
  CHECK(bilinear_at(g, 0.5, 0.5) == doctest::Approx(2.5));
  CHECK(bilinear_at(g, 0.25, 0.0) == doctest::Approx(1.5));
}

TEST_CASE("bilinear_at at integer coordinates returns grid values exactly") {
  const RealGrid g = random_grid(6, 7, 2);
  for (int a = 0; a < 6; ++a)
    for (int l = 0; l < 7; ++l)
      CHECK(bilinear_at(g, static_cast<double>(a), static_cast<double>(l)) == g(a, l));
}

TEST_CASE("zero field warp is the identity") {
  const RealGrid g = random_grid(9, 8, 3);
  const DisplacementField f = DisplacementField::zeros(9, 8);
  const WarpResult r = warp_image(g, f);
  for (int a = 0; a < 9; ++a)
    for (int l = 0; l < 8; ++l) {
      CHECK(r.image(a, l) == g(a, l));
      CHECK(r.valid(a, l) == 1);
    }
}

TEST_CASE("constant integer shift reads shifted samples and masks the tail") {
  const RealGrid g = random_grid(10, 6, 4);
  DisplacementField f = DisplacementField::zeros(10, 6);
  f.w_a.fill(2.0);
  f.refresh_validity();
  const WarpResult r = warp_image(g, f);
  for (int a = 0; a < 10; ++a)
    for (int l = 0; l < 6; ++l) {
      if (a <= 7) {
        CHECK(r.image(a, l) == g(a + 2, l));
        CHECK(r.valid(a, l) == 1);
      } else {
        CHECK(r.image(a, l) == 0.0);
        CHECK(r.valid(a, l) == 0);
      }
    }
}

TEST_CASE("half-sample shift of a linear ramp is exact") {
  const RealGrid g = ramp_axial(8, 5);
  DisplacementField f = DisplacementField::zeros(8, 5);
  f.w_a.fill(0.5);
  f.refresh_validity();
  const WarpResult r = warp_image(g, f);
  for (int a = 0; a < 7; ++a)
    for (int l = 0; l < 5; ++l)
      CHECK(r.image(a, l) == doctest::Approx(a + 0.5).epsilon(1e-12));
  for (int l = 0; l < 5; ++l) CHECK(r.valid(7, l) == 0);
}

TEST_CASE("warp is linear in the image argument") {
  const RealGrid x = random_grid(12, 9, 5);
  const RealGrid y = random_grid(12, 9, 6);
  DisplacementField f = DisplacementField::zeros(12, 9);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (double& v : f.w_a) v = u(rng);
  for (double& v : f.w_l) v = u(rng);
  f.refresh_validity();

  RealGrid mix(12, 9);
  for (int a = 0; a < 12; ++a)
    for (int l = 0; l < 9; ++l) mix(a, l) = 2.0 * x(a, l) - 0.5 * y(a, l);
  const WarpResult wx = warp_image(x, f);
  const WarpResult wy = warp_image(y, f);
  const WarpResult wm = warp_image(mix, f);
  for (int a = 0; a < 12; ++a)
    for (int l = 0; l < 9; ++l)
      CHECK(wm.image(a, l) ==
            doctest::Approx(2.0 * wx.image(a, l) - 0.5 * wy.image(a, l)).epsilon(1e-10));
}

TEST_CASE("warp_image rejects shape mismatch") {
  const RealGrid g = random_grid(8, 8, 1);
  const DisplacementField f = DisplacementField::zeros(8, 7);
  CHECK_THROWS_AS(warp_image(g, f), std::invalid_argument);
}

TEST_CASE("warp_gradient of a linear image is its slope") {
  RealGrid g(9, 9);
  for (int a = 0; a < 9; ++a)
    for (int l = 0; l < 9; ++l) g(a, l) = 3.0 * a;
  const DisplacementField f = DisplacementField::zeros(9, 9);
  RealGrid up(9, 9, 1.0);
  const FieldGradient grad = warp_gradient(g, f, up);
  for (int a = 1; a < 8; ++a)
    for (int l = 1; l < 8; ++l) {
      CHECK(grad.w_a(a, l) == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(grad.w_l(a, l) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("warp_gradient with zero upstream vanishes") {
  const RealGrid g = random_grid(8, 8, 9);
  DisplacementField f = DisplacementField::zeros(8, 8);
  f.w_a.fill(0.3);
  f.refresh_validity();
  const FieldGradient grad = warp_gradient(g, f, RealGrid(8, 8, 0.0));
  for (double v : grad.w_a) CHECK(v == 0.0);
  for (double v : grad.w_l) CHECK(v == 0.0);
}

TEST_CASE("warp_gradient matches central finite differences") {
  const int n = 24;
  const RealGrid g = random_grid(n, n, 10);
  DisplacementField f = DisplacementField::zeros(n, n);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(0.05, 0.45);
  for (double& v : f.w_a) v = (rng() & 1 ? 1.0 : -1.0) * mag(rng);
  for (double& v : f.w_l) v = (rng() & 1 ? 1.0 : -1.0) * mag(rng);
  f.refresh_validity();
  const RealGrid up = random_grid(n, n, 12);

  const FieldGradient grad = warp_gradient(g, f, up);
  const auto objective = [&] {
    const WarpResult r = warp_image(g, f);
    double s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int l = 0; l < n; ++l) s += up(a, l) * r.image(a, l);
    return s;
  };

  const double h = 1e-5;
  double worst = 0.0, scale = 1e-12;
  for (RealGrid* comp : {&f.w_a, &f.w_l}) {
    const RealGrid& ga = comp == &f.w_a ? grad.w_a : grad.w_l;
    for (int a = 0; a < n; ++a)
      for (int l = 0; l < n; ++l) {
        const double saved = (*comp)(a, l);
        (*comp)(a, l) = saved + h;
        const double hi = objective();
        (*comp)(a, l) = saved - h;
        const double lo = objective();
        (*comp)(a, l) = saved;
        const double fd = (hi - lo) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - ga(a, l)));
        scale = std::max(scale, std::abs(fd));
      }
  }
  CHECK(worst / scale < 1e-4);
}

TEST_CASE("windowed residuals are zero for identical frames") {
  const RealGrid g = random_grid(6, 6, 13);
  const MultiChannelFrame mc = wrap_channels(g);
  MaskGrid valid(6, 6, 1);
  const ResidualWindows rw = windowed_data_residual(mc, mc, valid, 3);
  for (const RealGrid& ch : rw.residual)
    for (double v : ch) CHECK(v == 0.0);
}

TEST_CASE("window of 1 reduces to pointwise differences") {
  const RealGrid a = random_grid(5, 5, 14);
  const RealGrid b = random_grid(5, 5, 15);
  MaskGrid valid(5, 5, 1);
  const ResidualWindows rw =
      windowed_data_residual(wrap_channels(a), wrap_channels(b), valid, 1);
  CHECK(rw.total == 25);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) {
      CHECK(rw.counts(r, c) == 1);
      CHECK(rw.residual[0](r, c) == a(r, c) - b(r, c));
    }
}

TEST_CASE("3x3 window gathers 9 residuals per interior sample") {
  MaskGrid valid(5, 5, 1);
  const RealGrid a = random_grid(5, 5, 16);
  const ResidualWindows rw =
      windowed_data_residual(wrap_channels(a), wrap_channels(a), valid, 3);
  CHECK(rw.counts(2, 2) == 9);
  CHECK(rw.counts(0, 0) == 4);  // corner window clipped to 2x2
  CHECK(rw.counts(0, 2) == 6);  // edge window clipped to 2x3
  long long total = 0;
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) total += rw.counts(r, c);
  CHECK(rw.total == total);
  CHECK(rw.flatten().size() == static_cast<std::size_t>(3 * total));
}

TEST_CASE("invalid samples are excluded from windows") {
  MaskGrid valid(5, 5, 1);
  valid(2, 2) = 0;
  const RealGrid a = random_grid(5, 5, 17);
  const ResidualWindows rw =
      windowed_data_residual(wrap_channels(a), wrap_channels(a), valid, 3);
  CHECK(rw.counts(2, 2) == 0);       // invalid center gathers nothing
  CHECK(rw.counts(1, 1) == 8);       // neighbor windows lose the invalid sample
  CHECK(rw.residual[0](2, 2) == 0.0);
}

TEST_CASE("windowed_data_residual rejects even windows") {
  const RealGrid a = random_grid(5, 5, 18);
  MaskGrid valid(5, 5, 1);
  CHECK_THROWS_AS(windowed_data_residual(wrap_channels(a), wrap_channels(a), valid, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(windowed_data_residual(wrap_channels(a), wrap_channels(a), valid, 0),
                  std::invalid_argument);
}
