#pragma once

#include <complex>
#include <span>
#include <vector>

#include "strainflow/rf_frame.hpp"

namespace strainflow {

// Analytic signal of one A-line via the frequency-domain Hilbert transform:
// forward FFT, zero the strictly negative frequency bins, double the strictly
// positive ones (DC and, for even lengths, Nyquist are kept as-is), inverse
// FFT. The real part of the result reproduces the input.
std::vector<std::complex<double>> analytic_signal(std::span<const double> line);

// Expands a frame into the (RF, envelope, quadrature) channel triple.
// The analytic signal is taken column by column (along the axial direction)
// and all three channels are divided by the RMS of the raw RF samples, so
// their relative amplitudes are preserved. An all-zero frame stays zero.
MultiChannelFrame build_channels(const RfFrame& frame);

}  // namespace strainflow
