// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <vector>

#include "drnnsep/common.hpp"
#include "drnnsep/signal/audio.hpp"

namespace drnnsep {

/// estimate = target + interference + artifacts, mutually orthogonal.
struct BssDecomposition {
  Vector target;
  Vector interference;
  Vector artifacts;

  double target_energy() const { return target.squaredNorm(); }
  double interference_energy() const { return interference.squaredNorm(); }
  double artifact_energy() const { return artifacts.squaredNorm(); }
};

/// Zero-lag BSS-EVAL decomposition: the target part is the orthogonal
/// projection of the estimate onto the true target source, interference is
/// the projection onto the span of all sources minus the target part, and
/// artifacts are the remainder. `target` is a 0-based index into `sources`.
inline BssDecomposition bss_decompose(std::span<const double> estimate,
                                      const std::vector<std::span<const double>>& sources,
                                      std::size_t target) {
  if (sources.empty()) throw ConfigError("bss_eval: no reference sources");
  if (target >= sources.size())
    throw ConfigError(detail::concat("bss_eval: target index ", target, " out of range"));
  const auto n = static_cast<Eigen::Index>(estimate.size());
  for (const auto& s : sources)
    if (static_cast<Eigen::Index>(s.size()) != n)
      throw DimensionError(detail::concat("bss_eval: length mismatch (estimate ", n, ", source ", s.size(), ")"));

  const Eigen::Map<const Vector> est(estimate.data(), n);
  Matrix refs(n, static_cast<Eigen::Index>(sources.size()));
  for (std::size_t j = 0; j < sources.size(); ++j)
    refs.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(sources[j].data(), n);

  const auto s = refs.col(static_cast<Eigen::Index>(target));
  const double s_energy = s.squaredNorm();
  if (s_energy == 0.0) throw InputError("bss_eval: target source is silent");

  BssDecomposition d;
  d.target = (est.dot(s) / s_energy) * s;
  const Vector coeffs = refs.completeOrthogonalDecomposition().solve(est);
  const Vector in_span = refs * coeffs;
  d.interference = in_span - d.target;
  d.artifacts = est - in_span;
  return d;
}

struct SeparationScores {
  double sdr = 0.0;
  double sir = 0.0;
  double sar = 0.0;
  std::size_t clip_len = 0;
};

/// SDR, SIR and SAR in dB, each capped at +200 dB.
inline SeparationScores scores_from(const BssDecomposition& d) {
  SeparationScores s;
  const double target = d.target_energy();
  s.sdr = to_db(target / (d.interference + d.artifacts).squaredNorm());
  s.sir = to_db(target / d.interference_energy());
  s.sar = to_db((d.target + d.interference).squaredNorm() / d.artifact_energy());
  s.clip_len = static_cast<std::size_t>(d.target.size());
  return s;
}

inline SeparationScores bss_eval(const AudioClip& estimate, const std::vector<AudioClip>& sources,
                                 std::size_t target) {
  std::vector<std::span<const double>> refs;
  for (const auto& s : sources) {
    if (s.sample_rate != estimate.sample_rate) throw ConfigError("bss_eval: sample rates differ");
    refs.emplace_back(s.samples);
  }
  return scores_from(bss_decompose(estimate.samples, refs, target));
}

/// SDR of `estimate` for `clean` against the sources {clean, mixture - clean}.
inline double sdr_against_mixture(const AudioClip& estimate, const AudioClip& clean, const AudioClip& mixture) {
  if (mixture.size() != clean.size()) throw DimensionError("nsdr: mixture and clean lengths differ");
  AudioClip residual = mixture;
  for (std::size_t i = 0; i < residual.size(); ++i) residual.samples[i] -= clean.samples[i];
  return bss_eval(estimate, {clean, residual}, 0).sdr;
}

/// NSDR = SDR(estimate, clean) - SDR(mixture, clean).
inline double nsdr(const AudioClip& estimate, const AudioClip& clean, const AudioClip& mixture) {
  return sdr_against_mixture(estimate, clean, mixture) - sdr_against_mixture(mixture, clean, mixture);
}

/// Per-clip numbers that feed the global (length-weighted) scores.
struct ClipScore {
  double nsdr = 0.0;
  double sir = 0.0;
  double sar = 0.0;
  std::size_t length = 0;
  double sdr = 0.0;
};

struct GlobalScores {
  double gnsdr = 0.0;
  double gsir = 0.0;
  double gsar = 0.0;
  double gsdr = 0.0;  // same weighting applied to SDR
};

/// Length-weighted means sum(len_i v_i) / sum(len_i).
inline GlobalScores global_scores(std::span<const ClipScore> clips) {
  if (clips.empty()) throw InputError("global_scores: no clips");
  GlobalScores g;
  double total = 0.0;
  for (const auto& c : clips) {
    if (c.length == 0) throw InputError("global_scores: clip lengths must be positive");
    const double w = static_cast<double>(c.length);
    g.gnsdr += w * c.nsdr;
    g.gsir += w * c.sir;
    g.gsar += w * c.sar;
    g.gsdr += w * c.sdr;
    total += w;
  }
  g.gnsdr /= total;
  g.gsir /= total;
  g.gsar /= total;
  g.gsdr /= total;
  return g;
}

}  // namespace drnnsep
