// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end: mix, train, nmf-train, separate, evaluate, sweep.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "drnnsep/drnnsep.hpp"

namespace {

namespace fs = std::filesystem;
using namespace drnnsep;
using namespace drnnsep::harness;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::string out;
  std::string manifest;
  std::string model;
  std::string estimates;
  std::string split = "test";
  std::string name = "model";
  std::string condition = "default";
  std::string status = "seen";
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  bool irm = false;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig cfg = ExperimentConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

int cmd_mix(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const Manifest m = mix_corpus(cfg, o.out);
  std::cout << "wrote " << m.entries.size() << " clips to " << (fs::path(o.out) / kManifestFile).string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const Manifest m = Manifest::read(o.manifest);
  const TrainOutcome t = run_train(cfg, m, o.out);
  std::cout << "best dev loss " << io::format_number(t.result.best_dev_loss) << " at iteration "
            << t.result.best_iteration << " (initial " << io::format_number(t.initial_dev_loss) << ", stop: "
            << t.result.stop_reason << ")\nmodel written to " << t.model_path.string() << "\n";
  return 0;
}

int cmd_nmf_train(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const Manifest m = Manifest::read(o.manifest);
  const NmfModel model = run_nmf_train(cfg, m, o.out);
  std::cout << "learned " << model.source1.count() << " + " << model.source2.count() << " basis vectors; wrote "
            << (fs::path(o.out) / kNmfModelFile).string() << "\n";
  return 0;
}

int cmd_separate(const Options& o) {
  if (o.manifest.empty() == o.inputs.empty())
    throw ConfigError("separate: give either --manifest or mixture WAV files");
  std::optional<ExperimentConfig> cfg;
  if (!o.config.empty()) cfg = load_config(o);
  if (o.irm) {
    if (!cfg || o.manifest.empty()) throw ConfigError("separate --irm needs --config and --manifest");
    const std::size_t n = run_separate(nullptr, Manifest::read(o.manifest), o.split, o.out, cfg->stft);
    std::cout << "wrote ideal-ratio-mask estimates for " << n << " clips to " << o.out << "\n";
    return 0;
  }
  if (o.model.empty()) throw ConfigError("separate: --model is required");
  const Separator sep = Separator::load(o.model, cfg ? cfg->nmf.separate_iterations : 100);
  if (cfg && (cfg->stft != sep.frontend().stft || cfg->features != sep.frontend().features ||
              cfg->sample_rate != sep.frontend().sample_rate))
    throw ConfigError("separate: the model's STFT, feature or sample-rate settings differ from " + o.config);
  if (!o.manifest.empty()) {
    const std::size_t n = run_separate(&sep, Manifest::read(o.manifest), o.split, o.out);
    std::cout << "wrote " << sep.kind() << " estimates for " << n << " clips to " << o.out << "\n";
  } else {
    std::vector<fs::path> files(o.inputs.begin(), o.inputs.end());
    separate_files(sep, files, o.out);
    std::cout << "wrote " << sep.kind() << " estimates for " << files.size() << " files to " << o.out << "\n";
  }
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Manifest m = Manifest::read(o.manifest);
  const Evaluation ev = run_evaluate(m, o.split, o.estimates);
  write_evaluation(o.out, ev, o.name, o.condition, o.status, m.hash());
  for (int j = 0; j < 2; ++j)
    std::cout << "source" << j + 1 << ": GNSDR " << io::format_number(ev.global[j].gnsdr) << " dB, GSIR "
              << io::format_number(ev.global[j].gsir) << " dB, GSAR " << io::format_number(ev.global[j].gsar)
              << " dB over " << ev.n_clips << " clips\n";
  return 0;
}

int cmd_sweep(const Options& o) {
  SweepConfig sweep = SweepConfig::load(o.config);
  if (o.seed) sweep.base.seed = *o.seed;
  const SweepResult r = run_sweep(sweep, o.out, &std::cout);
  std::cout << "summary written to " << (fs::path(o.out) / kSummaryFile).string() << "\n";
  for (const auto& f : r.failures) std::cerr << "drnnsep: variant " << f.variant << " failed: " << f.message << "\n";
  return r.failures.empty() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monaural source separation with deep recurrent networks and joint soft masks"};
  app.require_subcommand(1);
  Options o;
  const auto add_seed = [&o](CLI::App* c) {
    c->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& s) { o.seed = s; },
                                          "Override task.seed");
  };

  CLI::App* mix = app.add_subcommand("mix", "Write mixture/source WAV triples and a manifest");
  mix->add_option("--config", o.config, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  mix->add_option("--out", o.out, "Output corpus directory")->required();
  add_seed(mix);

  CLI::App* train = app.add_subcommand("train", "Train a network on a manifest's train split");
  train->add_option("--config", o.config, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  train->add_option("--manifest", o.manifest, "Corpus manifest CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Output directory")->required();
  add_seed(train);

  CLI::App* nmf = app.add_subcommand("nmf-train", "Learn NMF bases for both sources");
  nmf->add_option("--config", o.config, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
  nmf->add_option("--manifest", o.manifest, "Corpus manifest CSV")->required()->check(CLI::ExistingFile);
  nmf->add_option("--out", o.out, "Output directory")->required();
  add_seed(nmf);

  CLI::App* sep = app.add_subcommand("separate", "Write estimated sources for each mixture");
  sep->add_option("--model", o.model, "Network or NMF model file")->check(CLI::ExistingFile);
  sep->add_option("--manifest", o.manifest, "Separate the clips of this manifest")->check(CLI::ExistingFile);
  sep->add_option("--split", o.split, "Manifest split: train, dev, test or all")->capture_default_str();
  sep->add_option("--config", o.config, "Config whose front end must match the model")->check(CLI::ExistingFile);
  sep->add_flag("--irm", o.irm, "Use the ideal ratio mask instead of a model");
  sep->add_option("--out", o.out, "Output directory")->required();
  sep->add_option("mixtures", o.inputs, "Mixture WAV files")->check(CLI::ExistingFile);

  CLI::App* eval = app.add_subcommand("evaluate", "Score estimates with BSS-EVAL");
  eval->add_option("--manifest", o.manifest, "Corpus manifest CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--estimates", o.estimates, "Directory of <clip>_est{1,2}.wav files")->required();
  eval->add_option("--split", o.split, "Manifest split")->capture_default_str();
  eval->add_option("--name", o.name, "Model label for the summary")->capture_default_str();
  eval->add_option("--condition", o.condition, "Condition label for the summary")->capture_default_str();
  eval->add_option("--status", o.status, "seen or unseen")->capture_default_str();
  eval->add_option("--out", o.out, "Output directory")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "Train and evaluate several variants on shared data");
  sweep->add_option("--config", o.config, "Sweep config (INI)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", o.out, "Output directory")->required();
  add_seed(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*mix) return cmd_mix(o);
    if (*train) return cmd_train(o);
    if (*nmf) return cmd_nmf_train(o);
    if (*sep) return cmd_separate(o);
    if (*eval) return cmd_evaluate(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const ConfigError& e) {
    std::cerr << "drnnsep: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "drnnsep: error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
