// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "drnnsep/common.hpp"
#include "drnnsep/io/csv.hpp"
#include "drnnsep/model/drnn.hpp"
#include "drnnsep/signal/features.hpp"
#include "drnnsep/signal/stft.hpp"
#include "drnnsep/training/loss.hpp"
#include "drnnsep/training/trainer.hpp"

namespace drnnsep::harness {

enum class Task { speech_sep, singing_sep, denoise };
enum class Generator { disjoint_band_noise, chirps, harmonic_vs_percussive };
enum class ModelKind { drnn, nmf, irm };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::speech_sep: return "speech_sep";
    case Task::singing_sep: return "singing_sep";
    case Task::denoise: return "denoise";
  }
  return "?";
}

inline std::string to_string(Generator g) {
  switch (g) {
    case Generator::disjoint_band_noise: return "disjoint_band_noise";
    case Generator::chirps: return "chirps";
    case Generator::harmonic_vs_percussive: return "harmonic_vs_percussive";
  }
  return "?";
}

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::drnn: return "drnn";
    case ModelKind::nmf: return "nmf";
    case ModelKind::irm: return "irm";
  }
  return "?";
}

inline Task parse_task(const std::string& s) {
  for (Task t : {Task::speech_sep, Task::singing_sep, Task::denoise})
    if (s == to_string(t)) return t;
  throw ConfigError("unknown task '" + s + "' (expected speech_sep, singing_sep or denoise)");
}

inline Generator parse_generator(const std::string& s) {
  for (Generator g : {Generator::disjoint_band_noise, Generator::chirps, Generator::harmonic_vs_percussive})
    if (s == to_string(g)) return g;
  throw ConfigError("unknown generator '" + s +
                    "' (expected disjoint_band_noise, chirps or harmonic_vs_percussive)");
}

inline ModelKind parse_model_kind(const std::string& s) {
  for (ModelKind k : {ModelKind::drnn, ModelKind::nmf, ModelKind::irm})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown model kind '" + s + "' (expected drnn, nmf or irm)");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

inline long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(what + ": expected an integer, got '" + s + "'");
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    if (!s.empty() && s[0] != '-') {
      const unsigned long long v = std::stoull(s, &pos);
      if (pos == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(what + ": expected a non-negative integer, got '" + s + "'");
}

inline double parse_real(const std::string& s, const std::string& what) {
  try {
    return io::parse_number(s, what);
  } catch (const FormatError&) {
    throw ConfigError(what + ": expected a number, got '" + s + "'");
  }
}

inline bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(what + ": expected true or false, got '" + s + "'");
}

}  // namespace detail

/// Where training and test audio come from.
struct CorpusSpec {
  /// Synthetic generators used for every split; ignored when dataset
  /// directories are given.
  std::vector<Generator> generators{Generator::disjoint_band_noise};
  double clip_seconds = 2.0;
  /// Clip counts per generator.
  int n_train = 16;
  int n_dev = 2;
  int n_test = 4;
  double snr_db = 0.0;
  /// Circular-shift augmentation step for training clips, in samples; 0 disables.
  std::size_t shift_step = 0;
  /// Two-directory layout: i-th file of each directory forms a pair.
  std::string source1_dir;
  std::string source2_dir;
  /// Stereo layout: voice on the right channel, accompaniment on the left.
  std::string stereo_dir;

  bool uses_dataset() const { return !source1_dir.empty() || !source2_dir.empty() || !stereo_dir.empty(); }
};

struct ModelSpec {
  ModelKind kind = ModelKind::drnn;
  std::vector<int> hidden{300, 300};
  Recurrence recurrence;
};

struct NmfSpec {
  int basis_count = 20;
  int train_iterations = 200;
  int separate_iterations = 100;
};

/// Fully resolved settings for one experiment. Text form is INI with one
/// section per module; unknown sections or keys are errors.
struct ExperimentConfig {
  Task task = Task::speech_sep;
  std::uint64_t seed = 1;
  int sample_rate = 16000;
  CorpusSpec corpus;
  StftConfig stft;
  FeatureConfig features;
  ModelSpec model;
  LossConfig loss;
  OptimizerConfig optimizer;
  int max_sequence_length = kDefaultMaxSequenceLength;
  NmfSpec nmf;

  FrontEnd frontend() const { return FrontEnd{stft, features, sample_rate}; }

  /// Sets one value from its text form; throws ConfigError for unknown keys
  /// or unparseable values.
  void set(const std::string& section, const std::string& key, const std::string& value);

  /// Canonical INI text; parse(to_ini()) reproduces the config exactly.
  std::string to_ini() const;

  /// Checks every field and throws one ConfigError listing all problems.
  void validate() const;

  static ExperimentConfig parse(const std::string& text, const std::string& name = "config");
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

namespace detail {

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline std::string num(double v) { return io::format_number(v); }

/// Every configurable value, in the order written by to_ini().
inline const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {"task", "name", [](const C& c) { return to_string(c.task); },
       [](C& c, const std::string& v) { c.task = parse_task(v); }},
      {"task", "seed", [](const C& c) { return std::to_string(c.seed); },
       [](C& c, const std::string& v) { c.seed = parse_u64(v, "task.seed"); }},
      {"task", "sample_rate", [](const C& c) { return std::to_string(c.sample_rate); },
       [](C& c, const std::string& v) { c.sample_rate = static_cast<int>(parse_int(v, "task.sample_rate")); }},

      {"corpus", "generators",
       [](const C& c) { return join<Generator>(c.corpus.generators, [](const Generator& g) { return to_string(g); }); },
       [](C& c, const std::string& v) {
         c.corpus.generators.clear();
         for (const auto& s : split_list(v)) c.corpus.generators.push_back(parse_generator(s));
       }},
      {"corpus", "clip_seconds", [](const C& c) { return num(c.corpus.clip_seconds); },
       [](C& c, const std::string& v) { c.corpus.clip_seconds = parse_real(v, "corpus.clip_seconds"); }},
      {"corpus", "n_train", [](const C& c) { return std::to_string(c.corpus.n_train); },
       [](C& c, const std::string& v) { c.corpus.n_train = static_cast<int>(parse_int(v, "corpus.n_train")); }},
      {"corpus", "n_dev", [](const C& c) { return std::to_string(c.corpus.n_dev); },
       [](C& c, const std::string& v) { c.corpus.n_dev = static_cast<int>(parse_int(v, "corpus.n_dev")); }},
      {"corpus", "n_test", [](const C& c) { return std::to_string(c.corpus.n_test); },
       [](C& c, const std::string& v) { c.corpus.n_test = static_cast<int>(parse_int(v, "corpus.n_test")); }},
      {"corpus", "snr_db", [](const C& c) { return num(c.corpus.snr_db); },
       [](C& c, const std::string& v) { c.corpus.snr_db = parse_real(v, "corpus.snr_db"); }},
      {"corpus", "shift_step", [](const C& c) { return std::to_string(c.corpus.shift_step); },
       [](C& c, const std::string& v) { c.corpus.shift_step = parse_u64(v, "corpus.shift_step"); }},
      {"corpus", "source1_dir", [](const C& c) { return c.corpus.source1_dir; },
       [](C& c, const std::string& v) { c.corpus.source1_dir = v; }},
      {"corpus", "source2_dir", [](const C& c) { return c.corpus.source2_dir; },
       [](C& c, const std::string& v) { c.corpus.source2_dir = v; }},
      {"corpus", "stereo_dir", [](const C& c) { return c.corpus.stereo_dir; },
       [](C& c, const std::string& v) { c.corpus.stereo_dir = v; }},

      {"stft", "fft_size", [](const C& c) { return std::to_string(c.stft.fft_size); },
       [](C& c, const std::string& v) { c.stft.fft_size = static_cast<int>(parse_int(v, "stft.fft_size")); }},
      {"stft", "hop", [](const C& c) { return std::to_string(c.stft.hop); },
       [](C& c, const std::string& v) { c.stft.hop = static_cast<int>(parse_int(v, "stft.hop")); }},
      {"stft", "window", [](const C& c) { return to_string(c.stft.window); },
       [](C& c, const std::string& v) { c.stft.window = parse_window(v); }},

      {"features", "kind", [](const C& c) { return to_string(c.features.kind); },
       [](C& c, const std::string& v) { c.features.kind = parse_feature_kind(v); }},
      {"features", "context_frames", [](const C& c) { return std::to_string(c.features.context_frames); },
       [](C& c, const std::string& v) {
         c.features.context_frames = static_cast<int>(parse_int(v, "features.context_frames"));
       }},
      {"features", "n_mels", [](const C& c) { return std::to_string(c.features.n_mels); },
       [](C& c, const std::string& v) { c.features.n_mels = static_cast<int>(parse_int(v, "features.n_mels")); }},

      {"model", "kind", [](const C& c) { return to_string(c.model.kind); },
       [](C& c, const std::string& v) { c.model.kind = parse_model_kind(v); }},
      {"model", "hidden",
       [](const C& c) { return join<int>(c.model.hidden, [](const int& h) { return std::to_string(h); }); },
       [](C& c, const std::string& v) {
         c.model.hidden.clear();
         for (const auto& s : split_list(v)) c.model.hidden.push_back(static_cast<int>(parse_int(s, "model.hidden")));
       }},
      {"model", "recurrence", [](const C& c) { return drnnsep::to_string(c.model.recurrence); },
       [](C& c, const std::string& v) { c.model.recurrence = parse_recurrence(v); }},
      {"model", "max_sequence_length", [](const C& c) { return std::to_string(c.max_sequence_length); },
       [](C& c, const std::string& v) {
         c.max_sequence_length = static_cast<int>(parse_int(v, "model.max_sequence_length"));
       }},

      {"loss", "gamma", [](const C& c) { return num(c.loss.gamma); },
       [](C& c, const std::string& v) { c.loss.gamma = parse_real(v, "loss.gamma"); }},
      {"loss", "joint_mask", [](const C& c) { return std::string(c.loss.use_masking_layer ? "true" : "false"); },
       [](C& c, const std::string& v) { c.loss.use_masking_layer = parse_bool(v, "loss.joint_mask"); }},

      {"optimizer", "max_iterations", [](const C& c) { return std::to_string(c.optimizer.max_iterations); },
       [](C& c, const std::string& v) {
         c.optimizer.max_iterations = static_cast<int>(parse_int(v, "optimizer.max_iterations"));
       }},
      {"optimizer", "history_size", [](const C& c) { return std::to_string(c.optimizer.history_size); },
       [](C& c, const std::string& v) {
         c.optimizer.history_size = static_cast<int>(parse_int(v, "optimizer.history_size"));
       }},
      {"optimizer", "minibatch_sequences", [](const C& c) { return std::to_string(c.optimizer.minibatch_sequences); },
       [](C& c, const std::string& v) {
         c.optimizer.minibatch_sequences = static_cast<int>(parse_int(v, "optimizer.minibatch_sequences"));
       }},
      {"optimizer", "batch_iterations", [](const C& c) { return std::to_string(c.optimizer.batch_iterations); },
       [](C& c, const std::string& v) {
         c.optimizer.batch_iterations = static_cast<int>(parse_int(v, "optimizer.batch_iterations"));
       }},
      {"optimizer", "patience", [](const C& c) { return std::to_string(c.optimizer.patience); },
       [](C& c, const std::string& v) { c.optimizer.patience = static_cast<int>(parse_int(v, "optimizer.patience")); }},
      {"optimizer", "convergence_tol", [](const C& c) { return num(c.optimizer.convergence_tol); },
       [](C& c, const std::string& v) { c.optimizer.convergence_tol = parse_real(v, "optimizer.convergence_tol"); }},

      {"nmf", "basis_count", [](const C& c) { return std::to_string(c.nmf.basis_count); },
       [](C& c, const std::string& v) { c.nmf.basis_count = static_cast<int>(parse_int(v, "nmf.basis_count")); }},
      {"nmf", "train_iterations", [](const C& c) { return std::to_string(c.nmf.train_iterations); },
       [](C& c, const std::string& v) {
         c.nmf.train_iterations = static_cast<int>(parse_int(v, "nmf.train_iterations"));
       }},
      {"nmf", "separate_iterations", [](const C& c) { return std::to_string(c.nmf.separate_iterations); },
       [](C& c, const std::string& v) {
         c.nmf.separate_iterations = static_cast<int>(parse_int(v, "nmf.separate_iterations"));
       }},
  };
  return table;
}

inline boost::property_tree::ptree read_ini_text(const std::string& text, const std::string& name) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

}  // namespace detail

inline void ExperimentConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  for (const auto& f : detail::fields()) {
    if (section == f.section && key == f.key) {
      f.set(*this, detail::trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + section + "." + key + "'");
}

inline std::string ExperimentConfig::to_ini() const {
  std::string out, current;
  for (const auto& f : detail::fields()) {
    if (current != f.section) {
      out += (current.empty() ? "[" : "\n[") + std::string(f.section) + "]\n";
      current = f.section;
    }
    out += std::string(f.key) + " = " + f.get(*this) + "\n";
  }
  return out;
}

inline void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  const auto check = [&problems](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  const auto guard = [&problems](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  };
  check(sample_rate > 0, "task.sample_rate must be positive");
  check(!corpus.generators.empty() || corpus.uses_dataset(), "corpus.generators must not be empty");
  check(corpus.clip_seconds > 0.0, "corpus.clip_seconds must be positive");
  check(corpus.n_train >= 1 && corpus.n_dev >= 1 && corpus.n_test >= 1, "corpus clip counts must be >= 1");
  check(std::isfinite(corpus.snr_db), "corpus.snr_db must be finite");
  for (const auto& [dir, key] : {std::pair{corpus.source1_dir, "source1_dir"}, std::pair{corpus.source2_dir, "source2_dir"},
                                 std::pair{corpus.stereo_dir, "stereo_dir"}})
    check(dir.empty() || std::filesystem::is_directory(dir), "corpus." + std::string(key) + " does not exist: " + dir);
  check(corpus.source1_dir.empty() == corpus.source2_dir.empty(),
        "corpus.source1_dir and corpus.source2_dir must be given together");
  check(corpus.stereo_dir.empty() || corpus.source1_dir.empty(),
        "corpus.stereo_dir cannot be combined with source directories");
  guard([this] { stft.validate(); });
  check(features.context_frames >= 1 && features.context_frames % 2 == 1,
        "features.context_frames must be a positive odd number");
  check(features.n_mels >= 1 && features.n_mels <= stft.bins(), "features.n_mels must lie in 1..fft_size/2+1");
  check(!model.hidden.empty(), "model.hidden needs at least one layer");
  for (int h : model.hidden) check(h >= 1, "model.hidden sizes must be positive");
  guard([this] {
    if (!model.hidden.empty()) Architecture::make(1, model.hidden, 1, model.recurrence);
  });
  check(max_sequence_length >= 1, "model.max_sequence_length must be >= 1");
  guard([this] { loss.validate(); });
  guard([this] { optimizer.validate(); });
  check(nmf.basis_count >= 1, "nmf.basis_count must be >= 1");
  check(nmf.train_iterations >= 0 && nmf.separate_iterations >= 0, "nmf iteration counts must be >= 0");
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& name) {
  const auto tree = detail::read_ini_text(text, name);
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(name + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) c.set(section, key, value.data());
  }
  return c;
}

inline ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

inline void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_ini();
}

}  // namespace drnnsep::harness
