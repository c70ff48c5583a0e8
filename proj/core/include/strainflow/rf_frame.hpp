#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "strainflow/grid.hpp"

namespace strainflow {

// One beamformed RF frame: real-valued samples plus the acquisition metadata
// needed to convert sample indices to physical distances.
struct RfFrame {
  RealGrid samples;
  double fs = 40.0e6;          // axial sampling rate [Hz]
  double fc = 10.0e6;          // transducer center frequency [Hz]
  double c = 1540.0;           // speed of sound [m/s]
  double line_pitch = 3.0e-4;  // lateral A-line spacing [m]

  int rows() const { return samples.rows(); }
  int cols() const { return samples.cols(); }

  // Throws std::invalid_argument when the frame cannot be processed.
  void validate() const {
    if (rows() < 64 || cols() < 16)
      throw std::invalid_argument("RfFrame: frame must be at least 64x16, got " +
                                  std::to_string(rows()) + "x" + std::to_string(cols()));
    if (!(fs > 0.0) || !(fc > 0.0) || !(c > 0.0) || !(line_pitch > 0.0))
      throw std::invalid_argument("RfFrame: fs, fc, c and line_pitch must be positive");
    if (!(fs > 2.0 * fc))
      throw std::invalid_argument("RfFrame: sampling rate must exceed twice the center frequency");
    if (!all_finite(samples))
      throw std::invalid_argument("RfFrame: samples contain non-finite values");
  }
};

// Distance between consecutive axial samples [m].
inline double axial_spacing(const RfFrame& frame) { return frame.c / (2.0 * frame.fs); }

// The three-channel representation fed to the losses: raw RF, envelope and
// the quadrature (imaginary analytic) component, all sharing one scale.
struct MultiChannelFrame {
  static constexpr int kRf = 0;
  static constexpr int kEnvelope = 1;
  static constexpr int kQuadrature = 2;

  std::array<RealGrid, 3> channels;
  double axial_step = 1.0;    // physical spacing between axial samples [m]
  double lateral_step = 1.0;  // physical spacing between lines [m]

  int rows() const { return channels[0].rows(); }
  int cols() const { return channels[0].cols(); }
};

}  // namespace strainflow
