#include "strainflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace strainflow {
namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;

// Lower series: P(a,x) = x^a e^-x / Γ(a) · Σ_{n>=0} x^n / (a(a+1)...(a+n)).
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("regularized_gamma_p: series did not converge");
}

// Upper continued fraction (modified Lentz): Q(a,x).
double gamma_q_contfrac(double a, double x) {
  const double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("regularized_gamma_p: continued fraction did not converge");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_p: a must be positive");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_sf(double x, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi2_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  const double a = 0.5 * df, hx = 0.5 * x;
  if (hx < a + 1.0) return 1.0 - gamma_p_series(a, hx);
  return gamma_q_contfrac(a, hx);
}

FriedmanResult friedman(const std::vector<std::vector<double>>& scores) {
  const int n = static_cast<int>(scores.size());
  if (n < 2) throw std::invalid_argument("friedman: need at least 2 blocks");
  const int k = static_cast<int>(scores.front().size());
  if (k < 2) throw std::invalid_argument("friedman: need at least 2 treatments");
  for (const auto& block : scores)
    if (static_cast<int>(block.size()) != k)
      throw std::invalid_argument("friedman: ragged score matrix");

  std::vector<double> rank_sum(static_cast<std::size_t>(k), 0.0);
  double tie_term = 0.0;  // sum over tied groups of t^3 - t

  std::vector<int> order(static_cast<std::size_t>(k));
  for (const auto& block : scores) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return block[static_cast<std::size_t>(i)] <
                                                block[static_cast<std::size_t>(j)]; });
    int i = 0;
    while (i < k) {
      int j = i;
      while (j + 1 < k &&
             block[static_cast<std::size_t>(order[static_cast<std::size_t>(j + 1)])] ==
                 block[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])])
        ++j;
      const int t = j - i + 1;
      const double avg_rank = 0.5 * (i + j) + 1.0;  // ranks are 1-based
      for (int q = i; q <= j; ++q)
        rank_sum[static_cast<std::size_t>(order[static_cast<std::size_t>(q)])] += avg_rank;
      tie_term += static_cast<double>(t) * t * t - t;
      i = j + 1;
    }
  }

  double q0 = 0.0;
  for (int j = 0; j < k; ++j) {
    const double mean_rank = rank_sum[static_cast<std::size_t>(j)] / n;
    const double dev = mean_rank - 0.5 * (k + 1);
    q0 += dev * dev;
  }
  q0 *= 12.0 * n / (static_cast<double>(k) * (k + 1));

  const double correction =
      1.0 - tie_term / (static_cast<double>(n) * k * (static_cast<double>(k) * k - 1));

  FriedmanResult r;
  r.treatments = k;
  r.blocks = n;
  if (correction <= 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.statistic = q0 / correction;
  r.p_value = chi2_sf(r.statistic, static_cast<double>(k - 1));
  return r;
}

}  // namespace strainflow
