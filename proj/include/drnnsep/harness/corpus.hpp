// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "drnnsep/harness/config.hpp"
#include "drnnsep/harness/parallel.hpp"
#include "drnnsep/harness/synthetic.hpp"
#include "drnnsep/io/container.hpp"
#include "drnnsep/io/csv.hpp"
#include "drnnsep/signal/audio.hpp"
#include "drnnsep/signal/mixing.hpp"

namespace drnnsep::harness {

namespace fs = std::filesystem;

inline constexpr const char* kManifestFile = "manifest.csv";
inline constexpr const char* kConfigEcho = "config.ini";
/// Largest mixture or source amplitude written to disk.
inline constexpr double kPeakLimit = 0.9;

inline std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

inline std::uint32_t file_crc(const fs::path& path) { return io::crc32_of(io::read_bytes(path)); }

inline std::string text_crc(const std::string& text) {
  return hex32(io::crc32_of(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size())));
}

/// One mixture/source triple. Paths are relative to the manifest directory.
struct ManifestEntry {
  std::string clip_id;
  std::string split;  // train, dev or test
  std::string generator;
  double snr_db = 0.0;
  std::size_t shift = 0;
  std::string mixture;
  std::string source1;
  std::string source2;
  std::size_t len_samples = 0;
  int sample_rate = 16000;
  std::uint32_t crc_mixture = 0;
  std::uint32_t crc_source1 = 0;
  std::uint32_t crc_source2 = 0;
};

class Manifest {
 public:
  fs::path root;
  std::vector<ManifestEntry> entries;

  static const std::vector<std::string>& columns() {
    static const std::vector<std::string> c = {"clip_id", "split",   "generator",   "snr_db",      "shift",
                                               "mixture", "source1", "source2",     "len_samples", "sample_rate",
                                               "crc_mixture", "crc_source1", "crc_source2"};
    return c;
  }

  io::CsvTable table() const {
    io::CsvTable t(columns());
    for (const auto& e : entries)
      t.add_row({e.clip_id, e.split, e.generator, io::format_number(e.snr_db), std::to_string(e.shift), e.mixture,
                 e.source1, e.source2, std::to_string(e.len_samples), std::to_string(e.sample_rate),
                 hex32(e.crc_mixture), hex32(e.crc_source1), hex32(e.crc_source2)});
    return t;
  }

  std::string text() const { return table().str(); }
  /// CRC-32 of the manifest text; identifies the exact data and splits.
  std::string hash() const { return text_crc(text()); }

  fs::path resolve(const std::string& rel) const { return root / rel; }

  std::vector<ManifestEntry> split(const std::string& name) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
      if (name == "all" || e.split == name) out.push_back(e);
    return out;
  }

  /// Writes <root>/manifest.csv; an existing manifest is a collision.
  void write() const {
    const fs::path file = root / kManifestFile;
    if (fs::exists(file)) throw InputError("manifest collision: " + file.string() + " already exists");
    std::set<std::string> ids;
    for (const auto& e : entries)
      if (!ids.insert(e.clip_id).second) throw InputError("manifest collision: duplicate clip id '" + e.clip_id + "'");
    table().write(file);
  }

  static Manifest read(const fs::path& file) {
    const io::CsvTable t = io::CsvTable::read(file);
    for (const auto& c : columns()) t.column(c);
    Manifest m;
    m.root = file.parent_path();
    const auto crc = [&](std::size_t r, const char* col) {
      const std::string& s = t.at(r, col);
      try {
        std::size_t used = 0;
        const unsigned long v = std::stoul(s, &used, 16);
        if (used == s.size() && s.size() == 8) return static_cast<std::uint32_t>(v);
      } catch (const std::exception&) {
      }
      throw FormatError(file.string() + ": bad " + col + " '" + s + "'");
    };
    const auto count = [&](std::size_t r, const char* col) {
      const double v = io::parse_number(t.at(r, col), file.string() + " " + col);
      if (!(v >= 0.0) || v != std::floor(v)) throw FormatError(file.string() + ": bad " + col);
      return static_cast<std::size_t>(v);
    };
    std::set<std::string> ids;
    for (std::size_t r = 0; r < t.size(); ++r) {
      ManifestEntry e;
      e.clip_id = t.at(r, "clip_id");
      if (!ids.insert(e.clip_id).second) throw FormatError(file.string() + ": duplicate clip id '" + e.clip_id + "'");
      e.split = t.at(r, "split");
      e.generator = t.at(r, "generator");
      e.snr_db = io::parse_number(t.at(r, "snr_db"), file.string() + " snr_db");
      e.shift = count(r, "shift");
      e.mixture = t.at(r, "mixture");
      e.source1 = t.at(r, "source1");
      e.source2 = t.at(r, "source2");
      e.len_samples = count(r, "len_samples");
      e.sample_rate = static_cast<int>(count(r, "sample_rate"));
      e.crc_mixture = crc(r, "crc_mixture");
      e.crc_source1 = crc(r, "crc_source1");
      e.crc_source2 = crc(r, "crc_source2");
      m.entries.push_back(std::move(e));
    }
    return m;
  }

  /// Every referenced file exists and matches its recorded CRC. All problems
  /// are reported together.
  void verify() const {
    std::vector<std::string> missing, corrupt;
    for (const auto& e : entries) {
      for (const auto& [rel, crc] :
           {std::pair{e.mixture, e.crc_mixture}, std::pair{e.source1, e.crc_source1}, std::pair{e.source2, e.crc_source2}}) {
        const fs::path p = resolve(rel);
        if (!fs::is_regular_file(p))
          missing.push_back(p.string());
        else if (file_crc(p) != crc)
          corrupt.push_back(p.string());
      }
    }
    std::string msg;
    for (const auto& p : missing) msg += "\n  missing: " + p;
    for (const auto& p : corrupt) msg += "\n  hash mismatch: " + p;
    if (!missing.empty()) throw InputError("manifest files unavailable:" + msg);
    if (!corrupt.empty()) throw FormatError("manifest files changed:" + msg);
  }
};

/// Mixture and sources exactly as stored on disk.
struct ClipTriple {
  AudioClip mixture;
  AudioClip source1;
  AudioClip source2;
};

inline ClipTriple load_triple(const Manifest& m, const ManifestEntry& e) {
  ClipTriple t{read_wav(m.resolve(e.mixture)), read_wav(m.resolve(e.source1)), read_wav(m.resolve(e.source2))};
  for (const AudioClip* c : {&t.mixture, &t.source1, &t.source2})
    if (c->size() != e.len_samples || c->sample_rate != e.sample_rate)
      throw FormatError("clip " + e.clip_id + ": audio does not match its manifest entry");
  return t;
}

/// Mixes at `snr_db`, scales everything down so no signal peaks above
/// kPeakLimit, then quantises both sources to 16 bits. The mixture is the sum
/// of the quantised sources, so mixture = s1 + s2 holds sample-exactly after a
/// PCM16 round trip.
inline ClipTriple quantised_mix(const AudioClip& s1, const AudioClip& s2, double snr_db) {
  MixedPair p = mix_at_snr(s1, s2, snr_db);
  double peak = 0.0;
  for (const AudioClip* c : {&p.mixture, &p.source1, &p.source2})
    for (double x : c->samples) peak = std::max(peak, std::abs(x));
  const double g = peak > kPeakLimit ? kPeakLimit / peak : 1.0;
  ClipTriple t{p.mixture, p.source1, p.source2};
  for (std::size_t i = 0; i < t.mixture.size(); ++i) {
    const int q1 = drnnsep::detail::quantize_pcm16(g * p.source1.samples[i]);
    const int q2 = drnnsep::detail::quantize_pcm16(g * p.source2.samples[i]);
    t.source1.samples[i] = q1 / 32768.0;
    t.source2.samples[i] = q2 / 32768.0;
    t.mixture.samples[i] = (q1 + q2) / 32768.0;
  }
  return t;
}

namespace detail {

inline const char* split_name(int s) {
  static const char* names[] = {"train", "dev", "test"};
  return names[s];
}

/// One clip to synthesise or ingest: where it goes and how to get its sources.
struct ClipJob {
  std::string clip_id;
  std::string split;
  std::string generator;
  std::function<SourcePair()> sources;
};

inline ManifestEntry write_triple(const fs::path& root, const std::string& clip_id, const std::string& split,
                                  const std::string& generator, double snr_db, std::size_t shift,
                                  const ClipTriple& t) {
  ManifestEntry e;
  e.clip_id = clip_id;
  e.split = split;
  e.generator = generator;
  e.snr_db = snr_db;
  e.shift = shift;
  e.mixture = "clips/" + clip_id + "_mix.wav";
  e.source1 = "clips/" + clip_id + "_s1.wav";
  e.source2 = "clips/" + clip_id + "_s2.wav";
  e.len_samples = t.mixture.size();
  e.sample_rate = t.mixture.sample_rate;
  write_wav(root / e.mixture, t.mixture, SampleFormat::pcm16);
  write_wav(root / e.source1, t.source1, SampleFormat::pcm16);
  write_wav(root / e.source2, t.source2, SampleFormat::pcm16);
  e.crc_mixture = file_crc(root / e.mixture);
  e.crc_source1 = file_crc(root / e.source1);
  e.crc_source2 = file_crc(root / e.source2);
  return e;
}

/// Runs the jobs in parallel. Training clips are expanded by circular-shift
/// augmentation when shift_step > 0.
inline Manifest run_jobs(const ExperimentConfig& cfg, const fs::path& out_dir, const std::vector<ClipJob>& jobs) {
  if (fs::exists(out_dir / kManifestFile))
    throw InputError("manifest collision: " + (out_dir / kManifestFile).string() + " already exists");
  std::set<std::string> ids;
  for (const auto& j : jobs)
    if (!ids.insert(j.clip_id).second) throw InputError("manifest collision: duplicate clip id '" + j.clip_id + "'");
  fs::create_directories(out_dir / "clips");
  std::vector<std::vector<ManifestEntry>> slots(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const ClipJob& job = jobs[i];
    const SourcePair p = job.sources();
    if (job.split == "train" && cfg.corpus.shift_step > 0) {
      const std::size_t count = std::max<std::size_t>(1, p.source2.size() / cfg.corpus.shift_step);
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t shift = k * cfg.corpus.shift_step;
        const std::string id = k == 0 ? job.clip_id : job.clip_id + "-shift" + std::to_string(shift);
        slots[i].push_back(write_triple(out_dir, id, job.split, job.generator, cfg.corpus.snr_db, shift,
                                        quantised_mix(p.source1, circular_shift(p.source2, shift), cfg.corpus.snr_db)));
      }
    } else {
      slots[i].push_back(write_triple(out_dir, job.clip_id, job.split, job.generator, cfg.corpus.snr_db, 0,
                                      quantised_mix(p.source1, p.source2, cfg.corpus.snr_db)));
    }
  });
  Manifest m;
  m.root = out_dir;
  for (auto& s : slots)
    for (auto& e : s) m.entries.push_back(std::move(e));
  m.write();
  cfg.save(out_dir / kConfigEcho);
  return m;
}

inline bool is_wav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

inline std::vector<fs::path> list_wavs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("corpus directory does not exist: " + dir);
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_wav(entry.path())) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no WAV files in " + dir);
  return out;
}

/// Seeded 80/10/10 assignment of n items; every split gets at least one.
inline std::vector<std::string> assign_splits(std::size_t n, std::uint64_t seed) {
  if (n < 3) throw InputError(drnnsep::detail::concat("dataset needs at least 3 pairs for train/dev/test, found ", n));
  const std::size_t n_dev = std::max<std::size_t>(1, n / 10), n_test = std::max<std::size_t>(1, n / 10);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::string> split(n, "train");
  for (std::size_t i = 0; i < n_dev; ++i) split[order[i]] = "dev";
  for (std::size_t i = n_dev; i < n_dev + n_test; ++i) split[order[i]] = "test";
  return split;
}

inline SourcePair trimmed(AudioClip a, AudioClip b) {
  const std::size_t n = std::min(a.size(), b.size());
  a.samples.resize(n);
  b.samples.resize(n);
  return {std::move(a), std::move(b)};
}

inline std::vector<ClipJob> dataset_jobs(const ExperimentConfig& cfg) {
  const int rate = cfg.sample_rate;
  std::vector<ClipJob> jobs;
  if (!cfg.corpus.stereo_dir.empty()) {
    // Two-channel files: accompaniment on the left, voice on the right.
    for (const auto& p : list_wavs(cfg.corpus.stereo_dir))
      jobs.push_back({p.stem().string(), "", "dataset", [p, rate] {
                        return trimmed(load_audio(p, rate, 1), load_audio(p, rate, 0));
                      }});
  } else {
    const auto a = list_wavs(cfg.corpus.source1_dir), b = list_wavs(cfg.corpus.source2_dir);
    if (a.size() != b.size())
      throw InputError(drnnsep::detail::concat("source directories hold ", a.size(), " and ", b.size(), " WAV files"));
    for (std::size_t i = 0; i < a.size(); ++i)
      jobs.push_back({a[i].stem().string(), "", "dataset", [p1 = a[i], p2 = b[i], rate] {
                        return trimmed(load_audio(p1, rate), load_audio(p2, rate));
                      }});
  }
  const auto splits = assign_splits(jobs.size(), cfg.seed);
  for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i].split = splits[i];
  return jobs;
}

/// RNG for one synthetic clip; depends only on the seed, generator, split and
/// index, so the same clip is produced whatever else the corpus contains.
inline std::mt19937_64 clip_rng(std::uint64_t seed, Generator g, int split, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(split),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Synthesises the requested splits for every configured generator.
inline std::vector<detail::ClipJob> synthetic_jobs(const ExperimentConfig& cfg,
                                                   const std::vector<std::string>& splits = {"train", "dev", "test"}) {
  std::vector<detail::ClipJob> jobs;
  const int counts[] = {cfg.corpus.n_train, cfg.corpus.n_dev, cfg.corpus.n_test};
  for (Generator g : cfg.corpus.generators) {
    for (int s = 0; s < 3; ++s) {
      if (std::find(splits.begin(), splits.end(), detail::split_name(s)) == splits.end()) continue;
      for (int i = 0; i < counts[s]; ++i) {
        char id[96];
        std::snprintf(id, sizeof id, "%s-%s-%04d", to_string(g).c_str(), detail::split_name(s), i);
        const double seconds = cfg.corpus.clip_seconds;
        const int rate = cfg.sample_rate;
        const std::uint64_t seed = cfg.seed;
        jobs.push_back({id, detail::split_name(s), to_string(g), [=] {
                          auto rng = detail::clip_rng(seed, g, s, i);
                          return generate_pair(g, seconds, rate, rng);
                        }});
      }
    }
  }
  return jobs;
}

/// Builds a corpus in `out_dir`: clips/, manifest.csv and config.ini. Uses
/// dataset directories when configured, synthetic generators otherwise.
inline Manifest mix_corpus(const ExperimentConfig& cfg, const fs::path& out_dir,
                           const std::vector<std::string>& splits = {"train", "dev", "test"}) {
  cfg.validate();
  return detail::run_jobs(cfg, out_dir,
                          cfg.corpus.uses_dataset() ? detail::dataset_jobs(cfg) : synthetic_jobs(cfg, splits));
}

}  // namespace drnnsep::harness
