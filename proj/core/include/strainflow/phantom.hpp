#pragma once

#include <cstdint>
#include <vector>

#include "strainflow/rf_frame.hpp"
#include "strainflow/warp.hpp"

namespace strainflow {

struct Inclusion {
  double center_a = 0.0;     // samples
  double center_l = 0.0;     // lines
  double radius = 0.0;       // samples
  double strain_ratio = 0.5; // inclusion strain = ratio x background strain
};

struct PhantomSpec {
  int rows = 256;
  int cols = 64;
  double scatterer_density = 2.0;       // expected scatterers per sample cell
  double psf_axial_sigma = 2.0;         // samples
  double psf_lateral_sigma = 1.2;       // lines
  double psf_center_freq_cycles = 0.25; // cycles per axial sample
  double background_strain = 0.02;
  std::vector<Inclusion> inclusions;
  double noise_snr_db = 30.0;           // +inf disables noise
  std::uint64_t seed = 0;

  // Acquisition metadata stamped on the rendered frames.
  double fs = 40.0e6;
  double fc = 10.0e6;
  double c = 1540.0;
  double line_pitch = 3.0e-4;

  void validate() const;
};

// The designed compression pattern: background_strain outside inclusions,
// strain_ratio x background_strain inside, with a raised-cosine transition
// band of 3 samples just inside each inclusion boundary.
RealGrid local_strain_map(const PhantomSpec& spec);

struct GroundTruth {
  DisplacementField forward;
  DisplacementField backward;
  // Central-difference axial derivative of the generated forward w_a, so the
  // strain/displacement pair is exactly self-consistent. Coincides with
  // local_strain_map away from inclusion transition bands.
  RealGrid local_axial_strain;
};

GroundTruth ground_truth_displacement(const PhantomSpec& spec);

struct PhantomPair {
  RfFrame i1;
  RfFrame i2;
  GroundTruth truth;
};

// Renders the speckle pair: scatterers drawn once from spec.seed, the second
// frame from the same scatterers moved by the forward ground truth, noise per
// noise_snr_db added to both.
PhantomPair render_pair(const PhantomSpec& spec);

}  // namespace strainflow
