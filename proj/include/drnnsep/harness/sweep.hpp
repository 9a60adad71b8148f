// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "drnnsep/harness/config.hpp"
#include "drnnsep/harness/corpus.hpp"
#include "drnnsep/harness/pipeline.hpp"

namespace drnnsep::harness {

inline constexpr const char* kSweepEcho = "sweep.ini";

/// One model to train: the base configuration plus `section.key` overrides.
struct SweepVariant {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;  // "section.key" -> value

  ExperimentConfig apply(const ExperimentConfig& base) const {
    ExperimentConfig c = base;
    for (const auto& [path, value] : overrides) {
      const auto dot = path.find('.');
      if (dot == std::string::npos)
        throw ConfigError("variant " + name + ": override '" + path + "' must have the form section.key");
      const std::string section = path.substr(0, dot);
      if (section == "corpus" || section == "task")
        throw ConfigError("variant " + name + ": '" + path + "' would change the shared data; set it in the base config");
      c.set(section, path.substr(dot + 1), value);
    }
    return c;
  }
};

/// One test set: generators and mixing SNR of its clips.
struct SweepCondition {
  std::string name;
  std::vector<Generator> generators;
  double snr_db = 0.0;
};

/// Base experiment plus [variant NAME] and [condition NAME] sections.
struct SweepConfig {
  ExperimentConfig base;
  std::vector<SweepVariant> variants;
  std::vector<SweepCondition> conditions;

  /// Variants and conditions with defaults filled in: a lone "base" variant
  /// and a lone "matched" condition equal to the training data.
  std::vector<SweepVariant> resolved_variants() const {
    return variants.empty() ? std::vector<SweepVariant>{{"base", {}}} : variants;
  }
  std::vector<SweepCondition> resolved_conditions() const {
    if (!conditions.empty()) return conditions;
    return {{"matched", base.corpus.generators, base.corpus.snr_db}};
  }

  /// A condition is seen when its generators and SNR equal the training data's.
  bool seen(const SweepCondition& c) const {
    const std::set<Generator> a(c.generators.begin(), c.generators.end());
    const std::set<Generator> b(base.corpus.generators.begin(), base.corpus.generators.end());
    return a == b && c.snr_db == base.corpus.snr_db;
  }

  /// Checks the base, every variant and every condition; reports all problems at once.
  void validate() const {
    std::vector<std::string> problems;
    const auto collect = [&problems](const std::string& where, const auto& fn) {
      try {
        fn();
      } catch (const ConfigError& e) {
        problems.push_back(where + ": " + e.what());
      }
    };
    collect("base", [&] { base.validate(); });
    if (base.corpus.uses_dataset() && !conditions.empty())
      problems.push_back("conditions require synthetic generators");
    std::set<std::string> names;
    for (const auto& v : resolved_variants()) {
      if (!names.insert("variant " + v.name).second) problems.push_back("duplicate variant " + v.name);
      collect("variant " + v.name, [&] { v.apply(base).validate(); });
    }
    for (const auto& c : resolved_conditions()) {
      if (!names.insert("condition " + c.name).second) problems.push_back("duplicate condition " + c.name);
      if (c.generators.empty()) problems.push_back("condition " + c.name + ": no generators");
    }
    if (!problems.empty()) {
      std::string msg = "invalid sweep configuration:";
      for (const auto& p : problems) msg += "\n  - " + p;
      throw ConfigError(msg);
    }
  }

  std::string to_ini() const {
    std::string out = base.to_ini();
    for (const auto& v : variants) {
      out += "\n[variant " + v.name + "]\n";
      for (const auto& [k, val] : v.overrides) out += k + " = " + val + "\n";
    }
    for (const auto& c : conditions) {
      out += "\n[condition " + c.name + "]\n";
      out += "generators = " +
             detail::join<Generator>(c.generators, [](const Generator& g) { return to_string(g); }) + "\n";
      out += "snr_db = " + io::format_number(c.snr_db) + "\n";
    }
    return out;
  }

  static SweepConfig parse(const std::string& text, const std::string& name = "sweep") {
    const auto tree = detail::read_ini_text(text, name);
    SweepConfig s;
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty())
        throw ConfigError(name + ": key '" + section + "' outside a section");
      if (section.rfind("variant ", 0) != 0 && section.rfind("condition ", 0) != 0)
        for (const auto& [key, value] : body) s.base.set(section, key, value.data());
    }
    // The INI reader drops empty sections, so variants and conditions are
    // taken from the headers in file order. Conditions default to the base
    // generators and SNR, hence they are resolved after the base is complete.
    for (const std::string& section : section_headers(text)) {
      const auto body = tree.get_child_optional(section);
      if (section.rfind("variant ", 0) == 0) {
        SweepVariant v{detail::trim(section.substr(8)), {}};
        if (body)
          for (const auto& [key, value] : *body) v.overrides.emplace_back(key, detail::trim(value.data()));
        s.variants.push_back(std::move(v));
      } else if (section.rfind("condition ", 0) == 0) {
        SweepCondition c{detail::trim(section.substr(10)), s.base.corpus.generators, s.base.corpus.snr_db};
        if (body)
          for (const auto& [key, value] : *body) {
            if (key != "generators" && key != "snr_db")
              throw ConfigError("condition " + c.name + ": unknown key '" + key + "' (expected generators or snr_db)");
            ExperimentConfig probe = s.base;
            probe.set("corpus", key, value.data());
            if (key == "generators")
              c.generators = probe.corpus.generators;
            else
              c.snr_db = probe.corpus.snr_db;
          }
        s.conditions.push_back(std::move(c));
      }
    }
    return s;
  }

  /// Section names in the order they appear, including empty sections.
  static std::vector<std::string> section_headers(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      const std::string t = detail::trim(line);
      if (t.size() >= 2 && t.front() == '[' && t.back() == ']') out.push_back(detail::trim(t.substr(1, t.size() - 2)));
    }
    return out;
  }

  static SweepConfig load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read sweep config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }
};

struct SweepFailure {
  std::string variant;
  std::string message;
};

struct SweepResult {
  io::CsvTable summary = summary_table();
  std::vector<SweepFailure> failures;
  std::string data_hash;
};

/// Trains every variant on one shared corpus and evaluates it on every
/// condition. Layout under `out_dir`:
///   corpus/                      shared train/dev/test clips
///   conditions/<name>/           extra test sets for conditions that differ
///   variants/<name>/             model, log and config of each variant
///   variants/<name>/<cond>/      estimates, per_clip.csv, summary.csv
///   summary.csv, sweep.ini
/// A failing variant is recorded and skipped; the others still run.
inline SweepResult run_sweep(const SweepConfig& sweep, const fs::path& out_dir, std::ostream* progress = nullptr) {
  sweep.validate();
  const auto say = [progress](const std::string& s) {
    if (progress) *progress << s << std::endl;
  };
  fs::create_directories(out_dir);
  std::ofstream(out_dir / kSweepEcho) << sweep.to_ini();

  SweepResult result;
  say("mixing shared corpus");
  const Manifest corpus = mix_corpus(sweep.base, out_dir / "corpus");
  result.data_hash = corpus.hash();

  struct TestSet {
    SweepCondition condition;
    Manifest manifest;
    bool seen;
  };
  std::vector<TestSet> tests;
  for (const auto& c : sweep.resolved_conditions()) {
    const bool seen = sweep.seen(c);
    if (seen && c.generators == sweep.base.corpus.generators) {
      tests.push_back({c, corpus, true});
      continue;
    }
    ExperimentConfig cc = sweep.base;
    cc.corpus.generators = c.generators;
    cc.corpus.snr_db = c.snr_db;
    say("mixing test set for condition " + c.name);
    tests.push_back({c, mix_corpus(cc, out_dir / "conditions" / c.name, {"test"}), seen});
  }

  for (const auto& v : sweep.resolved_variants()) {
    const fs::path vdir = out_dir / "variants" / v.name;
    try {
      const ExperimentConfig cfg = v.apply(sweep.base);
      std::optional<Separator> sep;
      if (cfg.model.kind == ModelKind::drnn) {
        say("training variant " + v.name);
        sep.emplace(run_train(cfg, corpus, vdir).result.model);
      } else if (cfg.model.kind == ModelKind::nmf) {
        say("learning NMF bases for variant " + v.name);
        sep.emplace(run_nmf_train(cfg, corpus, vdir), cfg.nmf.separate_iterations);
      } else {
        fs::create_directories(vdir);
        cfg.save(vdir / kConfigEcho);
      }
      for (const auto& t : tests) {
        say("evaluating variant " + v.name + " on " + t.condition.name);
        const fs::path cdir = vdir / t.condition.name;
        run_separate(sep ? &*sep : nullptr, t.manifest, "test", cdir / "estimates", cfg.stft);
        const Evaluation ev = run_evaluate(t.manifest, "test", cdir / "estimates");
        const std::string status = t.seen ? "seen" : "unseen";
        write_evaluation(cdir, ev, v.name, t.condition.name, status, result.data_hash);
        add_summary_rows(result.summary, ev, v.name, t.condition.name, status, result.data_hash);
      }
    } catch (const std::exception& e) {
      say("variant " + v.name + " failed: " + e.what());
      result.failures.push_back({v.name, e.what()});
      std::error_code ec;
      if (fs::create_directories(vdir, ec) || fs::is_directory(vdir, ec))
        std::ofstream(vdir / "error.txt") << e.what() << "\n";
      result.summary.add_row({v.name, "", "failed", "", "", "", "", "", "0", result.data_hash});
    }
  }
  result.summary.write(out_dir / kSummaryFile);
  return result;
}

}  // namespace drnnsep::harness
