#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace strainflow {

struct GradCheckTerm {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckTerm> terms;
  double tolerance = 1e-4;
  bool pass = false;

  // Deterministic printable form: same inputs, same bytes.
  std::string text() const;
};

// Compares every analytic loss gradient against central finite differences
// (h = 1e-5) on a randomized instance: white-noise channels and displacement
// fields with per-sample magnitudes in (0.05, 0.45), which keeps warped
// coordinates away from both cell boundaries and the frame border so the
// interpolant is smooth at the evaluation point. Relative error per term is
// max |g_analytic - g_fd| normalized by the largest finite-difference entry.
// `perturb` injects a deliberate error first (negative control).
GradCheckReport gradcheck(std::uint64_t seed, int rows, int cols, bool perturb = false,
                          double tolerance = 1e-4);

}  // namespace strainflow
