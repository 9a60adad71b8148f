// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "drnnsep/harness/config.hpp"
#include "drnnsep/signal/audio.hpp"
#include "drnnsep/signal/fft.hpp"

namespace drnnsep::harness {

/// RMS every synthetic source is scaled to before mixing.
inline constexpr double kSourceRms = 0.1;

/// Two unmixed synthetic sources of equal length.
struct SourcePair {
  AudioClip source1;
  AudioClip source2;
};

namespace detail {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline AudioClip make_clip(std::vector<double> samples, int rate) {
  AudioClip c;
  c.samples = std::move(samples);
  c.sample_rate = rate;
  return c;
}

inline void normalise_rms(std::vector<double>& x, double target) {
  double e = 0.0;
  for (double v : x) e += v * v;
  const double rms = std::sqrt(e / static_cast<double>(x.size()));
  if (rms > 0.0)
    for (double& v : x) v *= target / rms;
}

/// Applies gain(f) to the spectrum of x; f in Hz.
template <typename Gain>
std::vector<double> shape_spectrum(const std::vector<double>& x, int rate, Gain gain) {
  const int n = static_cast<int>(x.size());
  RealFft fft(n);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  fft.forward(x, spec);
  for (int k = 0; k < fft.bins(); ++k) spec[k] *= gain(static_cast<double>(k) * rate / n);
  std::vector<double> out(x.size());
  fft.inverse(spec, out);
  return out;
}

inline std::vector<double> white_noise(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

/// Slow sinusoidal amplitude modulation 1 + depth sin(2 pi f t + phase).
inline void modulate(std::vector<double>& x, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> depth(0.3, 0.8), freq(0.5, 4.0), phase(0.0, kTwoPi);
  const double d = depth(rng), f = freq(rng), p = phase(rng);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] *= 1.0 + d * std::sin(kTwoPi * f * static_cast<double>(i) / rate + p);
}

/// Zeroes every DFT bin outside [lo, hi] Hz.
inline std::vector<double> band_limit(const std::vector<double>& x, int rate, double lo, double hi) {
  return shape_spectrum(x, rate, [lo, hi](double f) { return f >= lo && f <= hi ? 1.0 : 0.0; });
}

inline SourcePair disjoint_band_noise(std::size_t n, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lo1(150, 400), hi1(1200, 1800), lo2(2600, 3200), hi2(4500, 6000);
  const double a = lo1(rng), b = hi1(rng), c = lo2(rng), d = hi2(rng);
  const double nyquist = 0.5 * rate;
  // Modulate before band-limiting so no energy leaks outside the band.
  std::vector<double> s1 = white_noise(n, rng), s2 = white_noise(n, rng);
  modulate(s1, rate, rng);
  modulate(s2, rate, rng);
  return {make_clip(band_limit(s1, rate, std::min(a, nyquist), std::min(b, nyquist)), rate),
          make_clip(band_limit(s2, rate, std::min(c, nyquist), std::min(d, nyquist)), rate)};
}

/// Raised-cosine fade in and out of `ramp` samples.
inline double note_envelope(std::size_t i, std::size_t len, std::size_t ramp) {
  const std::size_t r = std::min(ramp, len / 2);
  if (r == 0) return 1.0;
  const auto fade = [r](std::size_t k) { return 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(k) / r); };
  if (i < r) return fade(i);
  if (len - i <= r) return fade(len - i);
  return 1.0;
}

/// Per-event gain drawn log-uniformly over [-kEventRangeDb, 0] dB.
inline constexpr double kEventRangeDb = 40.0;

inline double event_gain(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> db(-kEventRangeDb, 0.0);
  return std::pow(10.0, db(rng) / 20.0);
}

/// Melody of harmonic notes with vibrato and varying loudness; partials fall off as 1/k.
inline std::vector<double> harmonic_melody(std::size_t n, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dur(0.2, 0.5), logf0(std::log(100.0), std::log(600.0)), u(0.0, 1.0);
  const double top = std::min(6000.0, 0.45 * rate);
  std::vector<double> x(n, 0.0);
  std::size_t start = 0;
  while (start < n) {
    const std::size_t len = std::min(n - start, static_cast<std::size_t>(dur(rng) * rate));
    const double f0 = std::exp(logf0(rng));
    const double vib_rate = 4.0 + 3.0 * u(rng), vib_depth = 0.01 * u(rng), gain = event_gain(rng);
    const int partials = std::max(1, static_cast<int>(top / (f0 * (1.0 + vib_depth))));
    std::vector<double> amp(static_cast<std::size_t>(partials)), phase0(amp.size());
    for (int k = 0; k < partials; ++k) {
      amp[k] = (0.5 + 0.5 * u(rng)) / (k + 1);
      phase0[k] = kTwoPi * u(rng);
    }
    double phase = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double f = f0 * (1.0 + vib_depth * std::sin(kTwoPi * vib_rate * static_cast<double>(i) / rate));
      phase += kTwoPi * f / rate;
      double v = 0.0;
      for (int k = 0; k < partials; ++k) v += amp[k] * std::sin((k + 1) * phase + phase0[k]);
      x[start + i] = gain * v * note_envelope(i, len, static_cast<std::size_t>(0.02 * rate));
    }
    start += len;
  }
  return x;
}

/// Short, exponentially decaying noise bursts of varying loudness, tilted
/// up or down in frequency by a random first-order filter.
inline std::vector<double> percussive_bursts(std::size_t n, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> gap(0.1, 0.35), tau(0.005, 0.03), tilt(-0.9, 0.9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n, 0.0);
  double t = 0.5 * gap(rng);
  while (t < static_cast<double>(n) / rate) {
    const std::size_t start = static_cast<std::size_t>(t * rate);
    const double decay = tau(rng) * rate, c = tilt(rng), a = event_gain(rng);
    double prev = 0.0;
    for (std::size_t i = start; i < n && i - start < static_cast<std::size_t>(6 * decay); ++i) {
      const double w = g(rng);
      x[i] += a * (w - c * prev) * std::exp(-static_cast<double>(i - start) / decay);
      prev = w;
    }
    t += gap(rng);
  }
  return x;
}

/// Two simultaneous linear sweeps with slow amplitude modulation.
inline std::vector<double> chirp_pair(std::size_t n, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(300.0, std::min(4000.0, 0.45 * rate)), u(0.0, 1.0);
  std::vector<double> x(n, 0.0);
  const double seconds = static_cast<double>(n) / rate;
  for (int c = 0; c < 2; ++c) {
    const double fa = f(rng), fb = f(rng), p0 = kTwoPi * u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      x[i] += std::sin(p0 + kTwoPi * (fa * t + 0.5 * (fb - fa) / seconds * t * t));
    }
  }
  modulate(x, rate, rng);
  return x;
}

/// Stationary noise with a 1/f power spectrum above 100 Hz.
inline std::vector<double> pink_noise(std::size_t n, int rate, std::mt19937_64& rng) {
  return shape_spectrum(white_noise(n, rng), rate, [](double f) { return f < 100.0 ? 0.0 : 1.0 / std::sqrt(f); });
}

}  // namespace detail

/// Deterministic source pair for one clip. Both sources are scaled to
/// kSourceRms; mixing at a target SNR happens afterwards.
///   disjoint_band_noise: low-band noise vs high-band noise, no spectral overlap.
///   harmonic_vs_percussive: harmonic melody vs coloured noise bursts, overlapping.
///   chirps: sweeping tones vs stationary pink noise.
inline SourcePair generate_pair(Generator g, double seconds, int rate, std::mt19937_64& rng) {
  if (!(seconds > 0.0) || rate <= 0) throw ConfigError("generate_pair: clip length and rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  if (n < 2) throw ConfigError("generate_pair: clip shorter than two samples");
  SourcePair p;
  switch (g) {
    case Generator::disjoint_band_noise:
      p = detail::disjoint_band_noise(n, rate, rng);
      break;
    case Generator::harmonic_vs_percussive:
      p.source1 = detail::make_clip(detail::harmonic_melody(n, rate, rng), rate);
      p.source2 = detail::make_clip(detail::percussive_bursts(n, rate, rng), rate);
      break;
    case Generator::chirps:
      p.source1 = detail::make_clip(detail::chirp_pair(n, rate, rng), rate);
      p.source2 = detail::make_clip(detail::pink_noise(n, rate, rng), rate);
      break;
  }
  detail::normalise_rms(p.source1.samples, kSourceRms);
  detail::normalise_rms(p.source2.samples, kSourceRms);
  return p;
}

}  // namespace drnnsep::harness
