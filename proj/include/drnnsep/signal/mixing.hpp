// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "drnnsep/common.hpp"
#include "drnnsep/signal/audio.hpp"

namespace drnnsep {

/// A mixture together with the exact addends that produced it.
struct MixedPair {
  AudioClip mixture;
  AudioClip source1;
  AudioClip source2;
  double gain = 1.0;       // amplitude factor applied to the second source
  std::size_t shift = 0;   // circular shift applied to the second source
};

/// 10 log10(E(a) / E(b)).
inline double energy_ratio_db(const AudioClip& a, const AudioClip& b) {
  return 10.0 * std::log10(a.energy() / b.energy());
}

/// Scales s2 so that 10 log10(E1 / E2') = snr_db over the common length and
/// returns s1 + s2'. Both inputs are truncated to the shorter one.
inline MixedPair mix_at_snr(const AudioClip& s1, const AudioClip& s2, double snr_db) {
  s1.validate();
  s2.validate();
  if (s1.sample_rate != s2.sample_rate)
    throw ConfigError(detail::concat("mix_at_snr: sample rates differ (", s1.sample_rate, " vs ",
                                     s2.sample_rate, ")"));
  const std::size_t n = std::min(s1.size(), s2.size());
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e1 += s1.samples[i] * s1.samples[i];
    e2 += s2.samples[i] * s2.samples[i];
  }
  if (e1 == 0.0 || e2 == 0.0)
    throw InputError("mix_at_snr: SNR is undefined for a silent source");

  MixedPair out;
  out.gain = std::sqrt(e1 / (e2 * std::pow(10.0, snr_db / 10.0)));
  for (AudioClip* c : {&out.mixture, &out.source1, &out.source2}) {
    c->sample_rate = s1.sample_rate;
    c->samples.resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.source1.samples[i] = s1.samples[i];
    out.source2.samples[i] = out.gain * s2.samples[i];
    out.mixture.samples[i] = out.source1.samples[i] + out.source2.samples[i];
  }
  return out;
}

/// Rotates `clip` right by `shift` samples: out[i] = in[(i - shift) mod n].
inline AudioClip circular_shift(const AudioClip& clip, std::size_t shift) {
  AudioClip out = clip;
  if (!clip.empty())
    std::rotate(out.samples.begin(),
                out.samples.end() - static_cast<long>(shift % clip.size()), out.samples.end());
  return out;
}

/// Circular-shift augmentation: s2 is rotated by 0, step, 2*step, ... and each
/// rotation is remixed with s1 at `snr_db`. Yields max(1, floor(len2 / step))
/// pairs.
inline std::vector<MixedPair> circular_shift_pairs(const AudioClip& s1, const AudioClip& s2,
                                                   std::size_t step, double snr_db = 0.0) {
  if (step == 0) throw ConfigError("circular_shift_pairs: step must be positive");
  const std::size_t count = std::max<std::size_t>(1, s2.size() / step);
  std::vector<MixedPair> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    MixedPair p = mix_at_snr(s1, circular_shift(s2, k * step), snr_db);
    p.shift = k * step;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace drnnsep
