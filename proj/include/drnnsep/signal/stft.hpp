// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "drnnsep/common.hpp"
#include "drnnsep/signal/audio.hpp"
#include "drnnsep/signal/fft.hpp"

namespace drnnsep {

enum class Window { hann, hamming, rectangular };

inline std::string to_string(Window w) {
  switch (w) {
    case Window::hann: return "hann";
    case Window::hamming: return "hamming";
    case Window::rectangular: return "rectangular";
  }
  return "?";
}

inline Window parse_window(const std::string& name) {
  if (name == "hann") return Window::hann;
  if (name == "hamming") return Window::hamming;
  if (name == "rectangular" || name == "rect") return Window::rectangular;
  throw ConfigError("unknown window '" + name + "'");
}

/// Periodic (DFT-even) window of length n.
inline std::vector<double> make_window(Window type, int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    const double c = std::cos(2.0 * M_PI * i / n);
    if (type == Window::hann) w[i] = 0.5 - 0.5 * c;
    if (type == Window::hamming) w[i] = 0.54 - 0.46 * c;
  }
  return w;
}

struct StftConfig {
  int fft_size = 1024;
  int hop = 512;
  Window window = Window::hann;

  int bins() const { return fft_size / 2 + 1; }
  /// Zeros prepended to the signal so frame t is centred on sample t*hop.
  int pad() const { return fft_size / 2; }

  /// Checks sizes and that the window overlap-adds to a constant at `hop`.
  void validate() const {
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
      throw ConfigError(detail::concat("fft_size must be a power of two >= 2, got ", fft_size));
    if (hop <= 0 || hop > fft_size)
      throw ConfigError(detail::concat("hop must satisfy 0 < hop <= fft_size, got ", hop));
    const auto w = make_window(window, fft_size);
    double lo = HUGE_VAL, hi = 0.0;
    for (int n = 0; n < hop; ++n) {
      double sum = 0.0;
      for (int i = n; i < fft_size; i += hop) sum += w[i];
      lo = std::min(lo, sum);
      hi = std::max(hi, sum);
    }
    if (!(lo > 0.0) || hi - lo > 1e-9 * hi)
      throw ConfigError(detail::concat(to_string(window), " window is not constant-overlap-add at hop ",
                                       hop, " for fft_size ", fft_size));
  }

  bool operator==(const StftConfig&) const = default;
};

/// Complex STFT frames, one row per frame (T x F).
struct Spectrogram {
  Eigen::MatrixXcd frames;
  StftConfig config;
  std::size_t original_length = 0;
  int sample_rate = 16000;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int num_bins() const { return static_cast<int>(frames.cols()); }
  Matrix magnitude() const { return frames.cwiseAbs(); }
  Matrix phase() const { return frames.unaryExpr([](std::complex<double> c) { return std::arg(c); }); }
};

/// Number of frames produced for a signal of `length` samples.
inline int frame_count(std::size_t length, const StftConfig& cfg) {
  const std::size_t span = length + static_cast<std::size_t>(cfg.pad());
  return static_cast<int>((span + cfg.hop - 1) / cfg.hop);
}

/// Short-time Fourier transform with centre padding: fft_size/2 zeros are
/// prepended and the tail is zero-filled, frame t is the windowed DFT of padded
/// samples [t*hop, t*hop + fft_size) and T = ceil((len + fft_size/2) / hop).
inline Spectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  clip.validate();
  cfg.validate();
  const int n = cfg.fft_size;
  const int frames = frame_count(clip.size(), cfg);
  const auto window = make_window(cfg.window, n);

  Spectrogram spec;
  spec.config = cfg;
  spec.original_length = clip.size();
  spec.sample_rate = clip.sample_rate;
  spec.frames.resize(frames, cfg.bins());

  RealFft fft(n);
  std::vector<double> segment(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> bins(static_cast<std::size_t>(cfg.bins()));
  const long len = static_cast<long>(clip.size());
  for (int t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * cfg.hop - cfg.pad();
    for (int i = 0; i < n; ++i) {
      const long s = start + i;
      segment[i] = (s >= 0 && s < len) ? clip.samples[static_cast<std::size_t>(s)] * window[i] : 0.0;
    }
    fft.forward(segment, bins);
    for (int k = 0; k < cfg.bins(); ++k) spec.frames(t, k) = bins[k];
  }
  return spec;
}

/// Overlap-add synthesis. Each sample is divided by the sum of analysis window
/// values that covered it, which equals the window's COLA constant away from
/// the edges; the result is truncated to the original length.
inline AudioClip istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.num_bins() != cfg.bins())
    throw DimensionError(detail::concat("istft: expected ", cfg.bins(), " bins, got ", spec.num_bins()));
  const int n = cfg.fft_size;
  const auto window = make_window(cfg.window, n);
  const std::size_t padded = static_cast<std::size_t>(spec.num_frames()) * cfg.hop + n;
  std::vector<double> acc(padded, 0.0), weight(padded, 0.0);

  RealFft fft(n);
  std::vector<std::complex<double>> bins(static_cast<std::size_t>(cfg.bins()));
  std::vector<double> segment(static_cast<std::size_t>(n));
  for (int t = 0; t < spec.num_frames(); ++t) {
    for (int k = 0; k < cfg.bins(); ++k) bins[k] = spec.frames(t, k);
    fft.inverse(bins, segment);
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < n; ++i) {
      acc[start + i] += segment[i];
      weight[start + i] += window[i];
    }
  }

  AudioClip out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(spec.original_length, 0.0);
  for (std::size_t i = 0; i < spec.original_length; ++i) {
    const std::size_t p = i + cfg.pad();
    if (p < padded && weight[p] > 1e-10) out.samples[i] = acc[p] / weight[p];
  }
  return out;
}

/// istft of mag * exp(i * phase(mixture)).
inline AudioClip reconstruct_with_mixture_phase(const Matrix& mag, const Spectrogram& mixture) {
  if (mag.rows() != mixture.frames.rows() || mag.cols() != mixture.frames.cols())
    throw DimensionError(detail::concat("reconstruct: magnitude is ", mag.rows(), "x", mag.cols(),
                                        ", mixture is ", mixture.frames.rows(), "x",
                                        mixture.frames.cols()));
  Spectrogram est = mixture;
  for (Eigen::Index t = 0; t < mag.rows(); ++t) {
    for (Eigen::Index k = 0; k < mag.cols(); ++k) {
      const std::complex<double> c = mixture.frames(t, k);
      const double a = std::abs(c);
      // Bins with zero mixture energy have no phase; use phase 0.
      est.frames(t, k) = a > 0.0 ? c * (mag(t, k) / a) : std::complex<double>(mag(t, k), 0.0);
    }
  }
  return istft(est);
}

}  // namespace drnnsep
