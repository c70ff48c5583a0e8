#include "strainflow/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace strainflow {
namespace {

// FFTW plan creation is not thread-safe; execution on disjoint buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuf {
  fftw_complex* p = nullptr;
  explicit FftwBuf(std::size_t n) : p(fftw_alloc_complex(n)) {
    if (!p) throw std::bad_alloc();
  }
  ~FftwBuf() { fftw_free(p); }
  FftwBuf(const FftwBuf&) = delete;
  FftwBuf& operator=(const FftwBuf&) = delete;
};

// In-place spectral one-sided filter + inverse transform shared by the
// single-line and whole-frame entry points. `fwd`/`bwd` are plans for the
// given buffers, `n` the line length.
void analytic_from_time(fftw_plan fwd, fftw_plan bwd, fftw_complex* freq, int n) {
  fftw_execute(fwd);
  for (int k = 1; k < n; ++k) {
    const bool positive = 2 * k < n;                 // strictly positive frequency
    const bool nyquist = n % 2 == 0 && k == n / 2;   // kept unmodified, like DC
    if (positive) {
      freq[k][0] *= 2.0;
      freq[k][1] *= 2.0;
    } else if (!nyquist) {
      freq[k][0] = 0.0;
      freq[k][1] = 0.0;
    }
  }
  fftw_execute(bwd);
}

}  // namespace

std::vector<std::complex<double>> analytic_signal(std::span<const double> line) {
  const int n = static_cast<int>(line.size());
  if (n < 2) throw std::invalid_argument("analytic_signal: need at least 2 samples");
  for (double x : line)
    if (!std::isfinite(x)) throw std::invalid_argument("analytic_signal: non-finite sample");

  FftwBuf time(static_cast<std::size_t>(n)), freq(static_cast<std::size_t>(n));
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft_1d(n, time.p, freq.p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(n, freq.p, time.p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  for (int i = 0; i < n; ++i) {
    time.p[i][0] = line[static_cast<std::size_t>(i)];
    time.p[i][1] = 0.0;
  }
  analytic_from_time(fwd, bwd, freq.p, n);

  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  const double scale = 1.0 / n;  // FFTW's backward transform is unnormalized
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = {time.p[i][0] * scale, time.p[i][1] * scale};

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  return out;
}

MultiChannelFrame build_channels(const RfFrame& frame) {
  frame.validate();
  const int rows = frame.rows(), cols = frame.cols();

  MultiChannelFrame out;
  out.axial_step = axial_spacing(frame);
  out.lateral_step = frame.line_pitch;
  out.channels[MultiChannelFrame::kRf] = frame.samples;
  out.channels[MultiChannelFrame::kEnvelope] = RealGrid(rows, cols);
  out.channels[MultiChannelFrame::kQuadrature] = RealGrid(rows, cols);

  FftwBuf time(static_cast<std::size_t>(rows)), freq(static_cast<std::size_t>(rows));
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft_1d(rows, time.p, freq.p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(rows, freq.p, time.p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  const double scale = 1.0 / rows;
  for (int l = 0; l < cols; ++l) {
    for (int a = 0; a < rows; ++a) {
      time.p[a][0] = frame.samples(a, l);
      time.p[a][1] = 0.0;
    }
    analytic_from_time(fwd, bwd, freq.p, rows);
    for (int a = 0; a < rows; ++a) {
      const double re = time.p[a][0] * scale;
      const double im = time.p[a][1] * scale;
      out.channels[MultiChannelFrame::kEnvelope](a, l) = std::hypot(re, im);
      out.channels[MultiChannelFrame::kQuadrature](a, l) = im;
    }
  }

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }

  const double rms = grid_rms(frame.samples);
  if (rms > 0.0) {
    for (auto& ch : out.channels)
      for (double& x : ch) x /= rms;
  }
  return out;
}

}  // namespace strainflow
