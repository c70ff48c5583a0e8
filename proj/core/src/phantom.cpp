#include "strainflow/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "strainflow/loss.hpp"

namespace strainflow {
namespace {

constexpr double kTransitionBand = 3.0;  // samples, inside the inclusion radius
constexpr double kPoissonHalf = 0.5;     // lateral strain = -0.5 x axial (nu = 0.5)

double clampd(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

void PhantomSpec::validate() const {
  if (rows < 64 || cols < 16)
    throw std::invalid_argument("PhantomSpec: frame must be at least 64x16");
  if (!(scatterer_density > 0.0))
    throw std::invalid_argument("PhantomSpec: scatterer_density must be positive");
  if (!(psf_axial_sigma > 0.0) || !(psf_lateral_sigma > 0.0))
    throw std::invalid_argument("PhantomSpec: PSF sigmas must be positive");
  if (!(psf_center_freq_cycles > 0.0 && psf_center_freq_cycles <= 0.5))
    throw std::invalid_argument("PhantomSpec: psf_center_freq_cycles must lie in (0, 0.5]");
  if (!(background_strain > 0.0 && background_strain <= 0.05))
    throw std::invalid_argument("PhantomSpec: background_strain must lie in (0, 0.05]");
  if (std::isnan(noise_snr_db))
    throw std::invalid_argument("PhantomSpec: noise_snr_db must not be NaN");
  if (!(fs > 0.0) || !(fc > 0.0) || !(c > 0.0) || !(line_pitch > 0.0) || !(fs > 2.0 * fc))
    throw std::invalid_argument("PhantomSpec: invalid acquisition metadata");
  for (const Inclusion& inc : inclusions) {
    if (!(inc.radius > 0.0)) throw std::invalid_argument("PhantomSpec: inclusion radius must be positive");
    if (!(inc.strain_ratio > 0.0 && inc.strain_ratio <= 1.0))
      throw std::invalid_argument("PhantomSpec: strain_ratio must lie in (0, 1]");
    if (inc.center_a - inc.radius < 0.0 || inc.center_a + inc.radius > rows - 1 ||
        inc.center_l - inc.radius < 0.0 || inc.center_l + inc.radius > cols - 1)
      throw std::invalid_argument("PhantomSpec: inclusion must lie fully inside the frame");
  }
  for (std::size_t i = 0; i < inclusions.size(); ++i)
    for (std::size_t j = i + 1; j < inclusions.size(); ++j) {
      const double d = std::hypot(inclusions[i].center_a - inclusions[j].center_a,
                                  inclusions[i].center_l - inclusions[j].center_l);
      if (d < inclusions[i].radius + inclusions[j].radius)
        throw std::invalid_argument("PhantomSpec: overlapping inclusions");
    }
}

RealGrid local_strain_map(const PhantomSpec& spec) {
  spec.validate();
  RealGrid strain(spec.rows, spec.cols, spec.background_strain);
  for (const Inclusion& inc : spec.inclusions) {
    const double inner = inc.strain_ratio * spec.background_strain;
    const double band = std::min(kTransitionBand, inc.radius);
    for (int a = 0; a < spec.rows; ++a) {
      for (int l = 0; l < spec.cols; ++l) {
        const double d = std::hypot(a - inc.center_a, l - inc.center_l);
        if (d >= inc.radius) continue;
        if (d <= inc.radius - band) {
          strain(a, l) = inner;
        } else {
          const double t = (d - (inc.radius - band)) / band;  // 0 at band start, 1 at radius
          strain(a, l) = inner + (spec.background_strain - inner) * 0.5 * (1.0 - std::cos(std::numbers::pi * t));
        }
      }
    }
  }
  return strain;
}

GroundTruth ground_truth_displacement(const PhantomSpec& spec) {
  const RealGrid strain = local_strain_map(spec);
  const int rows = spec.rows, cols = spec.cols;

  GroundTruth gt;
  gt.forward = DisplacementField::zeros(rows, cols);

  // Compression referenced to the transducer face: w_a(0,.) = 0, each step
  // down adds the local strain.
  for (int l = 0; l < cols; ++l)
    for (int a = 1; a < rows; ++a)
      gt.forward.w_a(a, l) = gt.forward.w_a(a - 1, l) + strain(a, l);

  const double l_center = (cols - 1) / 2.0;
  for (int l = 0; l < cols; ++l) {
    double col_mean = 0.0;
    for (int a = 0; a < rows; ++a) col_mean += strain(a, l);
    col_mean /= rows;
    const double wl = -kPoissonHalf * col_mean * (l - l_center);
    for (int a = 0; a < rows; ++a) gt.forward.w_l(a, l) = wl;
  }
  gt.forward.refresh_validity();

  // Backward field d solves d(y) = -w_f(y + d(y)) so that warping frame 1 by
  // d reconstructs frame 2.
  gt.backward = DisplacementField::zeros(rows, cols);
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-6;
  for (int a = 0; a < rows; ++a) {
    for (int l = 0; l < cols; ++l) {
      double da = 0.0, dl = 0.0;
      bool converged = false;
      for (int it = 0; it < kMaxIter; ++it) {
        const double x = clampd(a + da, 0.0, rows - 1);
        const double y = clampd(l + dl, 0.0, cols - 1);
        const double na = -bilinear_at(gt.forward.w_a, x, y);
        const double nl = -bilinear_at(gt.forward.w_l, x, y);
        const double delta = std::max(std::abs(na - da), std::abs(nl - dl));
        da = na;
        dl = nl;
        if (delta < kTol) {
          converged = true;
          break;
        }
      }
      if (!converged)
        throw std::runtime_error("ground_truth_displacement: backward fixed point at (" +
                                 std::to_string(a) + "," + std::to_string(l) +
                                 ") did not reach 1e-6 in 50 iterations");
      gt.backward.w_a(a, l) = da;
      gt.backward.w_l(a, l) = dl;
    }
  }
  gt.backward.refresh_validity();

  gt.local_axial_strain = diff_axial(gt.forward.w_a);
  return gt;
}

PhantomPair render_pair(const PhantomSpec& spec) {
  spec.validate();
  GroundTruth gt = ground_truth_displacement(spec);
  const int rows = spec.rows, cols = spec.cols;

  const long long n_scatter =
      std::llround(spec.scatterer_density * static_cast<double>(rows) * cols);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> pos_a(0.0, static_cast<double>(rows - 1));
  std::uniform_real_distribution<double> pos_l(0.0, static_cast<double>(cols - 1));
  std::normal_distribution<double> amp(0.0, 1.0);

  struct Scatterer {
    double a, l, amp;
  };
  std::vector<Scatterer> scatterers;
  scatterers.reserve(static_cast<std::size_t>(n_scatter));
  for (long long i = 0; i < n_scatter; ++i) {
    Scatterer s;
    s.a = pos_a(rng);
    s.l = pos_l(rng);
    s.amp = amp(rng);
    scatterers.push_back(s);
  }

  const double sa = spec.psf_axial_sigma, sl = spec.psf_lateral_sigma;
  const double f0 = spec.psf_center_freq_cycles;
  std::vector<double> ax_factor, lat_factor;

  auto splat = [&](RealGrid& img, double xa, double xl, double amplitude) {
    const int a1 = std::max(0, static_cast<int>(std::ceil(xa - 4.0 * sa)));
    const int a2 = std::min(rows - 1, static_cast<int>(std::floor(xa + 4.0 * sa)));
    const int l1 = std::max(0, static_cast<int>(std::ceil(xl - 4.0 * sl)));
    const int l2 = std::min(cols - 1, static_cast<int>(std::floor(xl + 4.0 * sl)));
    if (a1 > a2 || l1 > l2) return;
    ax_factor.resize(static_cast<std::size_t>(a2 - a1 + 1));
    lat_factor.resize(static_cast<std::size_t>(l2 - l1 + 1));
    for (int a = a1; a <= a2; ++a) {
      const double d = a - xa;
      ax_factor[static_cast<std::size_t>(a - a1)] =
          std::cos(2.0 * std::numbers::pi * f0 * d) * std::exp(-d * d / (2.0 * sa * sa));
    }
    for (int l = l1; l <= l2; ++l) {
      const double d = l - xl;
      lat_factor[static_cast<std::size_t>(l - l1)] = std::exp(-d * d / (2.0 * sl * sl));
    }
    for (int a = a1; a <= a2; ++a) {
      const double f = amplitude * ax_factor[static_cast<std::size_t>(a - a1)];
      for (int l = l1; l <= l2; ++l)
        img(a, l) += f * lat_factor[static_cast<std::size_t>(l - l1)];
    }
  };

  RealGrid img1(rows, cols), img2(rows, cols);
  for (const Scatterer& s : scatterers) splat(img1, s.a, s.l, s.amp);
  for (const Scatterer& s : scatterers) {
    const double da = bilinear_at(gt.forward.w_a, s.a, s.l);
    const double dl = bilinear_at(gt.forward.w_l, s.a, s.l);
    splat(img2, s.a + da, s.l + dl, s.amp);
  }

  if (std::isfinite(spec.noise_snr_db)) {
    std::normal_distribution<double> unit(0.0, 1.0);
    const double scale = std::pow(10.0, -spec.noise_snr_db / 20.0);
    const double sigma1 = grid_rms(img1) * scale;
    for (double& x : img1) x += sigma1 * unit(rng);
    const double sigma2 = grid_rms(img2) * scale;
    for (double& x : img2) x += sigma2 * unit(rng);
  }

  PhantomPair pair;
  pair.i1 = RfFrame{std::move(img1), spec.fs, spec.fc, spec.c, spec.line_pitch};
  pair.i2 = RfFrame{std::move(img2), spec.fs, spec.fc, spec.c, spec.line_pitch};
  pair.truth = std::move(gt);
  return pair;
}

}  // namespace strainflow
