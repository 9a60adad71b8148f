// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "drnnsep/common.hpp"
#include "drnnsep/signal/stft.hpp"

namespace drnnsep {

enum class FeatureKind { spectra, logmel_deltas };

inline std::string to_string(FeatureKind k) {
  return k == FeatureKind::spectra ? "spectra" : "logmel_deltas";
}

inline FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "spectra") return FeatureKind::spectra;
  if (s == "logmel_deltas" || s == "logmel") return FeatureKind::logmel_deltas;
  throw ConfigError("unknown feature kind '" + s + "'");
}

/// Per-frame network inputs (T x D). D = context_frames * base_dim.
struct FeatureSequence {
  Matrix vectors;
  FeatureKind kind = FeatureKind::spectra;
  int context_frames = 1;
  int base_dim = 0;

  int frames() const { return static_cast<int>(vectors.rows()); }
  int dim() const { return static_cast<int>(vectors.cols()); }
};

/// Floor applied to mel energies before the logarithm.
inline constexpr double kLogFloor = 1e-10;

/// Magnitude spectra |X_t| as features.
inline FeatureSequence magnitude_features(const Spectrogram& spec) {
  FeatureSequence seq;
  seq.vectors = spec.magnitude();
  seq.kind = FeatureKind::spectra;
  seq.base_dim = spec.num_bins();
  return seq;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters (n_mels x F) with centres equally spaced on the mel
/// scale between 0 Hz and sample_rate/2, unit peak height.
inline Matrix mel_filterbank(int n_mels, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  if (n_mels < 1) throw ConfigError("n_mels must be >= 1");
  if (n_mels > bins)
    throw ConfigError(detail::concat("n_mels (", n_mels, ") exceeds the number of STFT bins (", bins, ")"));
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(top * i / (n_mels + 1));

  Matrix fb = Matrix::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      if (f > lo && f < hi) fb(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

/// Regression deltas along time with edge replication:
///   d_t = sum_{n=1..N} n (c_{t+n} - c_{t-n}) / (2 sum_{n=1..N} n^2)
inline Matrix deltas(const Matrix& x, int half_window = 2) {
  const Eigen::Index frames = x.rows();
  Matrix d = Matrix::Zero(frames, x.cols());
  double denom = 0.0;
  for (int n = 1; n <= half_window; ++n) denom += 2.0 * n * n;
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int n = 1; n <= half_window; ++n) {
      const Eigen::Index next = std::min<Eigen::Index>(t + n, frames - 1);
      const Eigen::Index prev = std::max<Eigen::Index>(t - n, 0);
      d.row(t) += n * (x.row(next) - x.row(prev));
    }
  }
  return d / denom;
}

/// Log-mel energies of |X|^2 followed by first and second order deltas;
/// each frame is [static, delta, delta-delta] (3 * n_mels values).
inline FeatureSequence logmel_with_deltas(const Spectrogram& spec, int n_mels, int sample_rate) {
  const Matrix fb = mel_filterbank(n_mels, spec.config.fft_size, sample_rate);
  const Matrix power = spec.frames.cwiseAbs2();
  // Per-frame dot products, so equal frames give bit-identical energies.
  Matrix mel(power.rows(), n_mels);
  for (Eigen::Index t = 0; t < power.rows(); ++t)
    for (int m = 0; m < n_mels; ++m) mel(t, m) = std::log(std::max(power.row(t).dot(fb.row(m)), kLogFloor));
  const Matrix d1 = deltas(mel);
  const Matrix d2 = deltas(d1);

  FeatureSequence seq;
  seq.kind = FeatureKind::logmel_deltas;
  seq.base_dim = 3 * n_mels;
  seq.vectors.resize(mel.rows(), seq.base_dim);
  seq.vectors << mel, d1, d2;
  return seq;
}

/// Stacks each frame with its (frames-1)/2 neighbours on either side, older
/// frames first; neighbours past either end replicate the boundary frame.
inline FeatureSequence context_window(const FeatureSequence& seq, int frames) {
  if (frames < 1 || frames % 2 == 0)
    throw ConfigError(detail::concat("context window must be a positive odd frame count, got ", frames));
  if (seq.context_frames != 1)
    throw ConfigError("context_window: input already carries context");
  const int half = frames / 2;
  const Eigen::Index rows = seq.vectors.rows();
  const Eigen::Index dim = seq.vectors.cols();
  FeatureSequence out;
  out.kind = seq.kind;
  out.context_frames = frames;
  out.base_dim = seq.base_dim;
  out.vectors.resize(rows, dim * frames);
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (int j = -half; j <= half; ++j) {
      const Eigen::Index src = std::clamp<Eigen::Index>(t + j, 0, rows - 1);
      out.vectors.block(t, (j + half) * dim, 1, dim) = seq.vectors.row(src);
    }
  }
  return out;
}

struct FeatureConfig {
  FeatureKind kind = FeatureKind::spectra;
  int context_frames = 1;
  int n_mels = 40;

  int base_dim(int bins) const { return kind == FeatureKind::spectra ? bins : 3 * n_mels; }
  int input_dim(int bins) const { return context_frames * base_dim(bins); }
  bool operator==(const FeatureConfig&) const = default;
};

/// Network input features for one mixture spectrogram. Deltas are taken
/// before context stacking.
inline FeatureSequence extract_features(const Spectrogram& spec, const FeatureConfig& cfg) {
  FeatureSequence base = cfg.kind == FeatureKind::spectra
                             ? magnitude_features(spec)
                             : logmel_with_deltas(spec, cfg.n_mels, spec.sample_rate);
  return cfg.context_frames == 1 ? base : context_window(base, cfg.context_frames);
}

}  // namespace drnnsep
