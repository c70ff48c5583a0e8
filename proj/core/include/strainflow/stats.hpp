#pragma once

#include <vector>

namespace strainflow {

// Regularized lower incomplete gamma P(a, x), absolute error below 1e-10
// (series for x < a+1, continued fraction otherwise).
double regularized_gamma_p(double a, double x);

// Survival function of the chi-squared distribution with df degrees of
// freedom: Q(df/2, x/2).
double chi2_sf(double x, double df);

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int treatments = 0;
  int blocks = 0;
};

// Friedman rank test over `scores[block][treatment]` (n blocks, k treatments
// each). Average ranks on ties, standard tie-corrected statistic, p-value
// from chi2_sf with k-1 degrees of freedom. Fully tied data degenerates to
// statistic 0, p 1.
FriedmanResult friedman(const std::vector<std::vector<double>>& scores);

}  // namespace strainflow
