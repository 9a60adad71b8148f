// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <json.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drnnsep/eval/bss_eval.hpp"
#include "drnnsep/harness/config.hpp"
#include "drnnsep/harness/corpus.hpp"
#include "drnnsep/harness/parallel.hpp"
#include "drnnsep/io/csv.hpp"
#include "drnnsep/model/forward.hpp"
#include "drnnsep/model/serialize.hpp"
#include "drnnsep/nmf/basis_io.hpp"
#include "drnnsep/nmf/nmf.hpp"
#include "drnnsep/signal/features.hpp"
#include "drnnsep/signal/stft.hpp"
#include "drnnsep/training/sequences.hpp"
#include "drnnsep/training/trainer.hpp"

namespace drnnsep::harness {

inline constexpr const char* kModelFile = "model.drnn";
inline constexpr const char* kNmfModelFile = "model.nmf";
inline constexpr const char* kTrainLogFile = "train_log.csv";
inline constexpr const char* kOptimizerStateFile = "optimizer_state.json";
inline constexpr const char* kPerClipFile = "per_clip.csv";
inline constexpr const char* kSummaryFile = "summary.csv";

/// Magnitude spectra of one manifest clip, each T x F.
struct ClipSpectra {
  Spectrogram mixture;
  Matrix source1;
  Matrix source2;
};

inline void require_rate(const ManifestEntry& e, int rate) {
  if (e.sample_rate != rate)
    throw ConfigError(drnnsep::detail::concat("clip ", e.clip_id, " has sample rate ", e.sample_rate,
                                              ", configuration expects ", rate));
}

inline ClipSpectra clip_spectra(const Manifest& m, const ManifestEntry& e, const StftConfig& stft_cfg) {
  const ClipTriple t = load_triple(m, e);
  return {stft(t.mixture, stft_cfg), stft(t.source1, stft_cfg).magnitude(), stft(t.source2, stft_cfg).magnitude()};
}

/// Features and targets for every clip of a split, chopped into sequences.
inline TrainingBatch make_batch(const Manifest& m, const std::string& split, const ExperimentConfig& cfg) {
  const auto clips = m.split(split);
  for (const auto& e : clips) require_rate(e, cfg.sample_rate);
  std::vector<TrainingBatch> parts(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) {
    const ClipSpectra s = clip_spectra(m, clips[i], cfg.stft);
    const FeatureSequence f = extract_features(s.mixture, cfg.features);
    append_chopped(parts[i], f.vectors, s.mixture.magnitude(), s.source1, s.source2, cfg.max_sequence_length);
  });
  TrainingBatch batch;
  for (auto& p : parts)
    for (auto& seq : p.sequences) batch.sequences.push_back(std::move(seq));
  return batch;
}

inline Architecture architecture_for(const ExperimentConfig& cfg) {
  const int bins = cfg.stft.bins();
  return Architecture::make(cfg.features.input_dim(bins), cfg.model.hidden, bins, cfg.model.recurrence);
}

/// Seeded initial network for a configuration.
inline DrnnModel initial_model(const ExperimentConfig& cfg) {
  return DrnnModel::initialized(architecture_for(cfg), cfg.seed, cfg.frontend());
}

inline io::CsvTable training_log_table(const TrainResult& r) {
  io::CsvTable t({"iteration", "train_loss", "dev_loss", "grad_norm", "step_size", "elapsed_ms", "step_kind"});
  for (const auto& rec : r.log)
    t.add_row({std::to_string(rec.iteration), io::format_number(rec.train_loss), io::format_number(rec.dev_loss),
               io::format_number(rec.grad_norm), io::format_number(rec.step_size), io::format_number(rec.elapsed_ms),
               to_string(rec.kind)});
  return t;
}

struct TrainOutcome {
  TrainResult result;
  fs::path model_path;
  double initial_dev_loss = 0.0;
};

/// Features, chopping and L-BFGS training on the manifest's train split with
/// its dev split for model selection. Writes model.drnn, train_log.csv,
/// optimizer_state.json and config.ini into `out_dir`.
inline TrainOutcome run_train(const ExperimentConfig& cfg, const Manifest& m, const fs::path& out_dir) {
  cfg.validate();
  if (cfg.model.kind != ModelKind::drnn) throw ConfigError("train: model.kind must be drnn");
  const TrainingBatch train_set = make_batch(m, "train", cfg);
  const TrainingBatch dev_set = make_batch(m, "dev", cfg);
  if (train_set.empty()) throw InputError("train: manifest has no train clips");
  fs::create_directories(out_dir);
  cfg.save(out_dir / kConfigEcho);

  OptimizerConfig opt = cfg.optimizer;
  opt.seed = cfg.seed;
  TrainOutcome out;
  out.result = train(initial_model(cfg), train_set, cfg.loss, opt, dev_set);
  out.initial_dev_loss = out.result.log.front().dev_loss;
  out.model_path = out_dir / kModelFile;
  save_model(out.result.model, out.model_path);
  training_log_table(out.result).write(out_dir / kTrainLogFile);

  nlohmann::json state;
  state["best_iteration"] = out.result.best_iteration;
  state["best_dev_loss"] = out.result.best_dev_loss;
  state["initial_dev_loss"] = out.initial_dev_loss;
  state["iterations_run"] = out.result.log.back().iteration;
  state["stop_reason"] = out.result.stop_reason;
  state["history_size"] = opt.history_size;
  state["seed"] = opt.seed;
  state["data_hash"] = m.hash();
  std::ofstream(out_dir / kOptimizerStateFile) << state.dump(2) << "\n";
  return out;
}

/// Column-stacked magnitude spectra (F x sum T) of one source over a split.
inline Matrix stacked_source_magnitudes(const Manifest& m, const std::string& split, const ExperimentConfig& cfg,
                                        int source) {
  const auto clips = m.split(split);
  for (const auto& e : clips) require_rate(e, cfg.sample_rate);
  std::vector<Matrix> parts(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) {
    const ClipSpectra s = clip_spectra(m, clips[i], cfg.stft);
    parts[i] = (source == 1 ? s.source1 : s.source2).transpose();
  });
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Matrix v(cfg.stft.bins(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return v;
}

/// Learns one KL-NMF basis per source from the train split; writes model.nmf.
inline NmfModel run_nmf_train(const ExperimentConfig& cfg, const Manifest& m, const fs::path& out_dir) {
  cfg.validate();
  if (m.split("train").empty()) throw InputError("nmf-train: manifest has no train clips");
  NmfModel model;
  model.frontend = cfg.frontend();
  model.source1 = nmf_train(stacked_source_magnitudes(m, "train", cfg, 1), cfg.nmf.basis_count,
                            cfg.nmf.train_iterations, cfg.seed).basis;
  model.source2 = nmf_train(stacked_source_magnitudes(m, "train", cfg, 2), cfg.nmf.basis_count,
                            cfg.nmf.train_iterations, cfg.seed + 1).basis;
  fs::create_directories(out_dir);
  cfg.save(out_dir / kConfigEcho);
  save_nmf_model(model, out_dir / kNmfModelFile);
  return model;
}

/// Estimated magnitudes for both sources, T x F each.
using MagnitudePair = std::pair<Matrix, Matrix>;

/// A trained separation model: a network or a pair of NMF bases.
class Separator {
 public:
  explicit Separator(DrnnModel model) : drnn_(std::move(model)), frontend_(drnn_->frontend()) {}
  Separator(NmfModel model, int iterations)
      : nmf_(std::move(model)), frontend_(nmf_->frontend), nmf_iterations_(iterations) {}

  /// Loads either file type, recognised by its magic bytes.
  static Separator load(const fs::path& path, int nmf_iterations = 100) {
    const auto bytes = io::read_bytes(path);
    const std::string magic(bytes.begin(), bytes.begin() + std::min<std::size_t>(8, bytes.size()));
    if (magic == kModelMagic) return Separator(decode_model(bytes, path.string()));
    if (magic == kBasisMagic) return Separator(load_nmf_model(path), nmf_iterations);
    throw FormatError(path.string() + ": neither a network nor an NMF model file");
  }

  const FrontEnd& frontend() const { return frontend_; }
  std::string kind() const { return drnn_ ? "drnn" : "nmf"; }

  /// Soft-mask estimates; the two always sum to the mixture magnitudes.
  MagnitudePair magnitudes(const Spectrogram& mixture) const {
    const Matrix z = mixture.magnitude();
    if (drnn_) {
      const FeatureSequence f = extract_features(mixture, frontend_.features);
      ForwardTrace tr = masked_forward(*drnn_, f, z);
      return {std::move(tr.y1_tilde), std::move(tr.y2_tilde)};
    }
    const NmfSeparation s = nmf_separate(z.transpose(), nmf_->source1, nmf_->source2, nmf_iterations_);
    return {s.source1.transpose(), s.source2.transpose()};
  }

  /// Both source estimates, reconstructed with the mixture phase.
  std::pair<AudioClip, AudioClip> separate(const AudioClip& mixture) const {
    check_rate(mixture.sample_rate);
    const Spectrogram spec = stft(mixture, frontend_.stft);
    const auto [m1, m2] = magnitudes(spec);
    return {reconstruct_with_mixture_phase(m1, spec), reconstruct_with_mixture_phase(m2, spec)};
  }

  void check_rate(int rate) const {
    if (rate != frontend_.sample_rate)
      throw ConfigError(drnnsep::detail::concat("mixture sample rate ", rate, " does not match the model's ",
                                                frontend_.sample_rate));
  }

 private:
  std::optional<DrnnModel> drnn_;
  std::optional<NmfModel> nmf_;
  FrontEnd frontend_;
  int nmf_iterations_ = 100;
};

/// Oracle estimates from the ideal ratio mask |S1| / (|S1| + |S2|).
inline std::pair<AudioClip, AudioClip> ideal_ratio_mask_separate(const ClipTriple& t, const StftConfig& cfg) {
  const Spectrogram mix = stft(t.mixture, cfg);
  const Matrix mask = soft_mask(stft(t.source1, cfg).magnitude(), stft(t.source2, cfg).magnitude());
  const auto [m1, m2] = apply_mask_separately(mask, mix.magnitude());
  return {reconstruct_with_mixture_phase(m1, mix), reconstruct_with_mixture_phase(m2, mix)};
}

inline fs::path estimate_path(const fs::path& dir, const std::string& clip_id, int source) {
  return dir / (clip_id + "_est" + std::to_string(source) + ".wav");
}

inline void write_estimates(const fs::path& dir, const std::string& clip_id,
                            const std::pair<AudioClip, AudioClip>& est) {
  write_wav(estimate_path(dir, clip_id, 1), est.first, SampleFormat::float32);
  write_wav(estimate_path(dir, clip_id, 2), est.second, SampleFormat::float32);
}

/// Separates every clip of a split into <out_dir>/<clip_id>_est{1,2}.wav.
/// Without a separator the ideal ratio mask on `oracle_stft` is used.
inline std::size_t run_separate(const Separator* sep, const Manifest& m, const std::string& split,
                                const fs::path& out_dir, const StftConfig& oracle_stft = {}) {
  const auto clips = m.split(split);
  if (clips.empty()) throw InputError("separate: no clips in split '" + split + "'");
  if (sep)
    for (const auto& e : clips) sep->check_rate(e.sample_rate);
  fs::create_directories(out_dir);
  parallel_for(clips.size(), [&](std::size_t i) {
    const ClipTriple t = load_triple(m, clips[i]);
    write_estimates(out_dir, clips[i].clip_id, sep ? sep->separate(t.mixture) : ideal_ratio_mask_separate(t, oracle_stft));
  });
  return clips.size();
}

/// Separates standalone mixture files into <out_dir>/<stem>_est{1,2}.wav.
inline void separate_files(const Separator& sep, const std::vector<fs::path>& mixtures, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<AudioClip> clips(mixtures.size());
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    clips[i] = read_wav(mixtures[i]);
    sep.check_rate(clips[i].sample_rate);
  }
  parallel_for(mixtures.size(), [&](std::size_t i) {
    write_estimates(out_dir, mixtures[i].stem().string(), sep.separate(clips[i]));
  });
}

/// Per-clip scores plus length-weighted globals for both sources.
struct Evaluation {
  io::CsvTable per_clip{{"clip_id", "source", "sdr", "sir", "sar", "nsdr", "len_samples"}};
  std::array<GlobalScores, 2> global{};
  std::size_t n_clips = 0;
};

/// Scores the estimates in `est_dir` against the manifest's clean sources.
/// All missing estimate files are listed in one InputError.
inline Evaluation run_evaluate(const Manifest& m, const std::string& split, const fs::path& est_dir) {
  Manifest subset;
  subset.root = m.root;
  subset.entries = m.split(split);
  if (subset.entries.empty()) throw InputError("evaluate: no clips in split '" + split + "'");
  std::string missing;
  for (const auto& e : subset.entries)
    for (int j : {1, 2})
      if (!fs::is_regular_file(estimate_path(est_dir, e.clip_id, j)))
        missing += "\n  " + estimate_path(est_dir, e.clip_id, j).string();
  if (!missing.empty()) throw InputError("evaluate: missing estimate files:" + missing);
  subset.verify();

  const std::size_t n = subset.entries.size();
  std::vector<std::array<ClipScore, 2>> scores(n);
  parallel_for(n, [&](std::size_t i) {
    const ManifestEntry& e = subset.entries[i];
    const ClipTriple t = load_triple(subset, e);
    const std::vector<AudioClip> sources{t.source1, t.source2};
    for (int j = 0; j < 2; ++j) {
      const AudioClip est = read_wav(estimate_path(est_dir, e.clip_id, j + 1));
      if (est.size() != t.mixture.size())
        throw DimensionError(drnnsep::detail::concat("estimate for ", e.clip_id, " has ", est.size(),
                                                     " samples, mixture has ", t.mixture.size()));
      const SeparationScores s = bss_eval(est, sources, static_cast<std::size_t>(j));
      scores[i][j] = ClipScore{nsdr(est, sources[j], t.mixture), s.sir, s.sar, s.clip_len, s.sdr};
    }
  });

  Evaluation out;
  out.n_clips = n;
  std::array<std::vector<ClipScore>, 2> by_source;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 2; ++j) {
      const ClipScore& c = scores[i][j];
      out.per_clip.add_row({subset.entries[i].clip_id, "source" + std::to_string(j + 1), io::format_number(c.sdr),
                            io::format_number(c.sir), io::format_number(c.sar), io::format_number(c.nsdr),
                            std::to_string(c.length)});
      by_source[j].push_back(c);
    }
  }
  for (int j = 0; j < 2; ++j) out.global[j] = global_scores(by_source[j]);
  return out;
}

/// Summary CSV: one row per (model, condition, source).
inline io::CsvTable summary_table() {
  return io::CsvTable(
      {"model", "condition", "status", "source", "gnsdr", "gsdr", "gsir", "gsar", "n_clips", "data_hash"});
}

inline void add_summary_rows(io::CsvTable& table, const Evaluation& ev, const std::string& model,
                             const std::string& condition, const std::string& status, const std::string& data_hash) {
  for (int j = 0; j < 2; ++j) {
    const GlobalScores& g = ev.global[j];
    table.add_row({model, condition, status, "source" + std::to_string(j + 1), io::format_number(g.gnsdr),
                   io::format_number(g.gsdr), io::format_number(g.gsir), io::format_number(g.gsar),
                   std::to_string(ev.n_clips), data_hash});
  }
}

/// Writes per_clip.csv and summary.csv into `out_dir`.
inline void write_evaluation(const fs::path& out_dir, const Evaluation& ev, const std::string& model,
                             const std::string& condition, const std::string& status, const std::string& data_hash) {
  fs::create_directories(out_dir);
  ev.per_clip.write(out_dir / kPerClipFile);
  io::CsvTable summary = summary_table();
  add_summary_rows(summary, ev, model, condition, status, data_hash);
  summary.write(out_dir / kSummaryFile);
}

}  // namespace drnnsep::harness
