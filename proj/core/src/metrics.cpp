#include "strainflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strainflow {
namespace {

struct PatchStats {
  double mean, stddev;
};

PatchStats patch_stats(const RealGrid& g, int a0, int l0, int side) {
  // Shifted two-pass moments: working relative to the first element keeps a
  // constant patch's standard deviation exactly zero, which the degeneracy
  // accounting below relies on.
  const double g0 = g(a0, l0);
  double s = 0.0;
  for (int a = a0; a < a0 + side; ++a)
    for (int l = l0; l < l0 + side; ++l) s += g(a, l) - g0;
  const double n = static_cast<double>(side) * side;
  const double shifted_mean = s / n;
  double ss = 0.0;
  for (int a = a0; a < a0 + side; ++a)
    for (int l = l0; l < l0 + side; ++l) {
      const double d = (g(a, l) - g0) - shifted_mean;
      ss += d * d;
    }
  return {g0 + shifted_mean, std::sqrt(ss / n)};
}

// Top-left corners of stride-spaced patches inside `r`, row-major.
std::vector<std::pair<int, int>> patch_origins(const Rect& r, int patch, int stride) {
  std::vector<std::pair<int, int>> out;
  for (int a = r.a0; a + patch <= r.a0 + r.height; a += stride)
    for (int l = r.l0; l + patch <= r.l0 + r.width; l += stride) out.emplace_back(a, l);
  return out;
}

void mean_std(const std::vector<double>& v, double& mean, double& stddev) {
  mean = 0.0;
  stddev = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  stddev = std::sqrt(ss / static_cast<double>(v.size()));
}

bool rects_overlap(const Rect& x, const Rect& y) {
  return x.a0 < y.a0 + y.height && y.a0 < x.a0 + x.height && x.l0 < y.l0 + y.width &&
         y.l0 < x.l0 + x.width;
}

}  // namespace

void MetricWindows::validate(int rows, int cols) const {
  for (const Rect* r : {&target, &background}) {
    if (r->height < 1 || r->width < 1)
      throw std::invalid_argument("MetricWindows: rectangle dimensions must be positive");
    if (r->a0 < 0 || r->l0 < 0 || r->a0 + r->height > rows || r->l0 + r->width > cols)
      throw std::invalid_argument("MetricWindows: rectangle falls outside the image");
    if (patch > std::min(r->height, r->width))
      throw std::invalid_argument("MetricWindows: patch exceeds a rectangle dimension");
  }
  if (patch < 1) throw std::invalid_argument("MetricWindows: patch must be positive");
  if (stride < 1) throw std::invalid_argument("MetricWindows: stride must be >= 1");
  if (rects_overlap(target, background))
    throw std::invalid_argument("MetricWindows: target and background rectangles overlap");
}

double cnr(double target_mean, double target_std, double bg_mean, double bg_std) {
  if (target_std < 0.0 || bg_std < 0.0)
    throw std::invalid_argument("cnr: standard deviations must be non-negative");
  if (target_std == 0.0 && bg_std == 0.0)
    throw std::domain_error("cnr: both standard deviations are zero");
  const double diff = bg_mean - target_mean;
  return std::sqrt(2.0 * diff * diff / (bg_std * bg_std + target_std * target_std));
}

double sr(double target_mean, double bg_mean) {
  if (bg_mean == 0.0) throw std::domain_error("sr: background mean is zero");
  return target_mean / bg_mean;
}

MetricReport patch_sweep(const RealGrid& strain, const MetricWindows& windows) {
  windows.validate(strain.rows(), strain.cols());
  const auto targets = patch_origins(windows.target, windows.patch, windows.stride);
  const auto backgrounds = patch_origins(windows.background, windows.patch, windows.stride);
  if (targets.size() < 2 || backgrounds.size() < 2)
    throw std::invalid_argument("patch_sweep: need at least 2 patch positions per window");

  std::vector<PatchStats> ts, bs;
  ts.reserve(targets.size());
  bs.reserve(backgrounds.size());
  for (auto [a, l] : targets) ts.push_back(patch_stats(strain, a, l, windows.patch));
  for (auto [a, l] : backgrounds) bs.push_back(patch_stats(strain, a, l, windows.patch));

  MetricReport rep;
  rep.cnr_values.reserve(ts.size() * bs.size());
  rep.sr_values.reserve(ts.size() * bs.size());
  for (const PatchStats& t : ts) {
    for (const PatchStats& b : bs) {
      if (t.stddev == 0.0 && b.stddev == 0.0)
        ++rep.cnr_degenerate;
      else
        rep.cnr_values.push_back(cnr(t.mean, t.stddev, b.mean, b.stddev));
      if (b.mean == 0.0)
        ++rep.sr_degenerate;
      else
        rep.sr_values.push_back(t.mean / b.mean);
    }
  }
  mean_std(rep.cnr_values, rep.cnr_mean, rep.cnr_std);
  mean_std(rep.sr_values, rep.sr_mean, rep.sr_std);
  return rep;
}

double ssim(const RealGrid& a, const RealGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shapes differ");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  const int rows = a.rows(), cols = a.cols();
  if (rows < kWin || cols < kWin)
    throw std::invalid_argument("ssim: image must be at least 11x11");

  double lo = a(0, 0), hi = a(0, 0);
  for (double x : a) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (double x : b) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double range = hi - lo;
  if (range == 0.0) return 1.0;
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  double w[kWin];
  double wsum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    wsum += w[i];
  }
  for (double& x : w) x /= wsum;

  // Separable weighted moments: horizontal pass, then vertical.
  const int hcols = cols - kWin + 1;
  const int vrows = rows - kWin + 1;
  auto horiz = [&](const RealGrid& src, auto&& f) {
    RealGrid out(rows, hcols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < hcols; ++c) {
        double s = 0.0;
        for (int i = 0; i < kWin; ++i) s += w[i] * f(src(r, c + i));
        out(r, c) = s;
      }
    return out;
  };
  auto vert = [&](const RealGrid& src) {
    RealGrid out(vrows, hcols);
    for (int r = 0; r < vrows; ++r)
      for (int c = 0; c < hcols; ++c) {
        double s = 0.0;
        for (int i = 0; i < kWin; ++i) s += w[i] * src(r + i, c);
        out(r, c) = s;
      }
    return out;
  };

  const auto ident = [](double x) { return x; };
  const auto square = [](double x) { return x * x; };
  const RealGrid mu_a = vert(horiz(a, ident));
  const RealGrid mu_b = vert(horiz(b, ident));
  const RealGrid m_aa = vert(horiz(a, square));
  const RealGrid m_bb = vert(horiz(b, square));
  RealGrid ab(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) ab(r, c) = a(r, c) * b(r, c);
  const RealGrid m_ab = vert(horiz(ab, ident));

  double acc = 0.0;
  for (int r = 0; r < vrows; ++r) {
    for (int c = 0; c < hcols; ++c) {
      const double ma = mu_a(r, c), mb = mu_b(r, c);
      const double va = m_aa(r, c) - ma * ma;
      const double vb = m_bb(r, c) - mb * mb;
      const double vab = m_ab(r, c) - ma * mb;
      const double num = (2.0 * ma * mb + c1) * (2.0 * vab + c2);
      const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      acc += num / den;
    }
  }
  return acc / (static_cast<double>(vrows) * hcols);
}

}  // namespace strainflow
