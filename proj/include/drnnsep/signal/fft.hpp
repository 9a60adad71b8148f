// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <span>

#include "drnnsep/common.hpp"

namespace drnnsep {

/// Real-input DFT of fixed length backed by FFTW. Each instance owns its plans
/// and buffers, so separate instances can be used from separate threads.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    if (n < 1) throw ConfigError("RealFft: length must be positive");
    time_ = fftw_alloc_real(static_cast<std::size_t>(n));
    freq_ = fftw_alloc_complex(static_cast<std::size_t>(bins()));
    // FFTW's planner is not thread safe.
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, freq_, time_, FFTW_ESTIMATE);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
  }

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// out[k] = sum_n in[n] exp(-2 pi i k n / N), k = 0..N/2.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) {
    if (static_cast<int>(in.size()) != n_ || static_cast<int>(out.size()) != bins())
      throw DimensionError("RealFft::forward: buffer size mismatch");
    std::copy(in.begin(), in.end(), time_);
    fftw_execute(forward_);
    for (int k = 0; k < bins(); ++k) out[k] = {freq_[k][0], freq_[k][1]};
  }

  /// Inverse of forward() including the 1/N factor. Imaginary parts of the DC
  /// and Nyquist bins are ignored.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    if (static_cast<int>(in.size()) != bins() || static_cast<int>(out.size()) != n_)
      throw DimensionError("RealFft::inverse: buffer size mismatch");
    for (int k = 0; k < bins(); ++k) {
      freq_[k][0] = in[k].real();
      freq_[k][1] = in[k].imag();
    }
    fftw_execute(inverse_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = time_[i] * scale;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  int n_;
  double* time_ = nullptr;
  fftw_complex* freq_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace drnnsep
