// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Tolerances are pinned below; do not loosen them to
// make a run pass.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "drnnsep/drnnsep.hpp"
#include "gradient_check.hpp"

namespace {

namespace fs = std::filesystem;
using namespace drnnsep;
using namespace drnnsep::harness;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and limits.
constexpr double kGradEps = 1e-5;
constexpr double kGradTol = 1e-6;
constexpr int kGradDirections = 50;
constexpr double kGradSeconds = 60.0;
constexpr int kMaskInstances = 1000;
constexpr double kMaskTol = 1e-9;
constexpr int kDegeneracyInstances = 1000;
constexpr double kDegeneracyTol = 1e-12;
constexpr int kStftClips = 100;
constexpr double kStftTol = 1e-6;
constexpr int kBssInstances = 100;
constexpr double kBssTol = 1e-9;
constexpr double kSirTarget = 20.0;
constexpr double kSirTol = 0.01;
constexpr int kNmfMatrices = 50;
constexpr int kNmfUpdates = 200;
constexpr double kNmfSlack = 1e-10;
constexpr double kE2eSdr = 15.0;
constexpr double kE2eIrmSdr = 25.0;
constexpr double kE2eMinutes = 15.0;
constexpr double kOrderingMargin = 1.0;

constexpr std::uint64_t kSeed = 20260401;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- 1 to 6

/// Random model whose raw outputs sit on the scale of the target magnitudes.
/// With outputs near zero the mask's third derivative grows like
/// 1 / (|a| + |b|)^3 and the eps^2 truncation of the central difference,
/// not the analytic gradient, dominates the comparison.
DrnnModel target_scale_model(const Architecture& arch, std::mt19937_64& rng) {
  DrnnModel m = testing::random_model(arch, rng());
  std::uniform_real_distribution<double> level(0.5, 1.5);
  auto out = m.bias(m.num_layers() - 1);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = level(rng);
  return m;
}

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  const std::pair<const char*, Recurrence> nets[] = {
      {"dnn", Recurrence::none()}, {"drnn-1", Recurrence::at(1)}, {"drnn-2", Recurrence::at(2)}, {"srnn", Recurrence::all()}};
  std::mt19937_64 rng(kSeed);
  double worst = 0.0;
  int failures = 0, checked = 0;
  std::string worst_case;
  for (const auto& [name, rec] : nets) {
    for (const double gamma : {0.0, 0.05}) {
      const DrnnModel m = target_scale_model(Architecture::make(12, {8, 8}, 6, rec), rng);
      const TrainingBatch batch = testing::random_batch(2, 12, 12, 6, rng);
      const auto r = testing::check_directional_derivatives(m, batch, LossConfig{gamma, true}, kGradDirections,
                                                            kGradEps, kGradTol, rng);
      failures += r.failures;
      checked += r.directions;
      if (r.worst > worst) {
        worst = r.worst;
        worst_case = fmt("%s/%s", name, gamma == 0.0 ? "mse" : "dis");
      }
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < kGradSeconds,
          fmt("gradient oracle: %d/%d directions within %.0e (eps %.0e), worst %.2e (%s), %.1f s (limit %.0f s)",
              checked - failures, checked, kGradTol, kGradEps, worst, worst_case.c_str(), secs, kGradSeconds)};
}

Recurrence random_recurrence(std::mt19937_64& rng) {
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return Recurrence::none();
    case 1: return Recurrence::at(1);
    case 2: return Recurrence::at(2);
    default: return Recurrence::all();
  }
}

Outcome mask_sum() {
  std::mt19937_64 rng(kSeed + 2);
  std::uniform_int_distribution<int> dim(1, 16), frames(1, 24), width(2, 12);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> logmag(-8.0, 4.0), u(0.0, 1.0);
  double worst = 0.0;
  int bad = 0;
  for (int k = 0; k < kMaskInstances; ++k) {
    const int d_in = dim(rng), bins = dim(rng), t = frames(rng), h = width(rng);
    const DrnnModel m = testing::random_model(Architecture::make(d_in, {h, h}, bins, random_recurrence(rng)), rng());
    Matrix x(t, d_in), z(t, bins);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 3.0 * n01(rng);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = u(rng) < 0.05 ? 0.0 : std::exp(logmag(rng));
    const ForwardTrace tr = masked_forward(m, x, z);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double err = std::abs(tr.y1_tilde(i) + tr.y2_tilde(i) - z(i));
      const double rel = z(i) > 0.0 ? err / z(i) : (err > 0.0 ? HUGE_VAL : 0.0);
      worst = std::max(worst, rel);
      if (!(rel <= kMaskTol)) ++bad;
    }
  }
  return {bad == 0, fmt("mask sum: %d instances, worst relative error %.2e (tol %.0e)", kMaskInstances, worst, kMaskTol)};
}

Outcome objective_degeneracy() {
  std::mt19937_64 rng(kSeed + 3);
  std::uniform_int_distribution<int> dim(1, 40);
  std::uniform_real_distribution<double> mag(0.0, 5.0);
  double worst = 0.0;
  const auto random = [&](int r, int c) {
    Matrix a(r, c);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = mag(rng);
    return a;
  };
  for (int k = 0; k < kDegeneracyInstances; ++k) {
    const int t = dim(rng), f = dim(rng);
    const Matrix e1 = random(t, f), e2 = random(t, f), y1 = random(t, f), y2 = random(t, f);
    const double mse = loss_mse(e1, e2, y1, y2);
    const double dis = loss_discriminative(e1, e2, y1, y2, 0.0);
    worst = std::max(worst, std::abs(dis - mse) / std::max(std::abs(mse), 1e-300));
  }
  return {worst <= kDegeneracyTol, fmt("objective degeneracy: %d instances, worst relative gap %.2e (tol %.0e)",
                                       kDegeneracyInstances, worst, kDegeneracyTol)};
}

Outcome stft_round_trip() {
  std::mt19937_64 rng(kSeed + 4);
  const StftConfig configs[] = {{1024, 512, Window::hann}, {512, 256, Window::hann}, {1024, 256, Window::hann},
                                {2048, 512, Window::hann}, {256, 256, Window::rectangular}};
  std::uniform_int_distribution<int> pick(0, std::size(configs) - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < kStftClips; ++k) {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(16000);
    for (double& v : clip.samples) v = u(rng);
    const AudioClip back = istft(stft(clip, configs[pick(rng)]));
    if (back.size() != clip.size()) return {false, "stft round trip: reconstructed length differs"};
    for (std::size_t i = 0; i < clip.size(); ++i) worst = std::max(worst, std::abs(back.samples[i] - clip.samples[i]));
  }
  return {worst < kStftTol,
          fmt("stft round trip: %d one-second clips, max abs error %.2e (tol %.0e)", kStftClips, worst, kStftTol)};
}

Outcome bss_oracle() {
  std::mt19937_64 rng(kSeed + 5);
  std::uniform_int_distribution<int> len(64, 4000), count(2, 4);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int k = 0; k < kBssInstances; ++k) {
    const int n = len(rng), j = count(rng);
    Matrix refs(n, j);
    for (Eigen::Index i = 0; i < refs.size(); ++i) refs(i) = n01(rng);
    Vector est = Vector::Zero(n);
    for (int c = 0; c < j; ++c) est += n01(rng) * refs.col(c);
    for (Eigen::Index i = 0; i < n; ++i) est(i) += 0.3 * n01(rng);
    std::vector<std::span<const double>> spans;
    for (int c = 0; c < j; ++c) spans.emplace_back(refs.col(c).data(), static_cast<std::size_t>(n));
    const std::size_t target = static_cast<std::size_t>(k % j);
    const BssDecomposition d = bss_decompose(std::span<const double>(est.data(), n), spans, target);

    // Oracle: least squares through the normal equations.
    const Vector s = refs.col(static_cast<Eigen::Index>(target));
    const Vector e_target = (est.dot(s) / s.squaredNorm()) * s;
    const Vector in_span = refs * (refs.transpose() * refs).ldlt().solve(refs.transpose() * est);
    const double scale = est.squaredNorm();
    worst = std::max({worst, std::abs(d.target_energy() - e_target.squaredNorm()) / scale,
                      std::abs(d.interference_energy() - (in_span - e_target).squaredNorm()) / scale,
                      std::abs(d.artifact_energy() - (est - in_span).squaredNorm()) / scale});
  }

  // Orthonormal sources, estimate s1 + 0.1 s2: SIR = 20 dB exactly.
  Matrix q(4096, 2);
  for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = n01(rng);
  const Matrix orth = q.householderQr().householderQ() * Matrix::Identity(4096, 2);
  AudioClip s1, s2, est;
  s1.samples.assign(orth.col(0).data(), orth.col(0).data() + 4096);
  s2.samples.assign(orth.col(1).data(), orth.col(1).data() + 4096);
  est.samples.resize(4096);
  for (std::size_t i = 0; i < 4096; ++i) est.samples[i] = s1.samples[i] + 0.1 * s2.samples[i];
  const double sir = bss_eval(est, {s1, s2}, 0).sir;

  return {worst <= kBssTol && std::abs(sir - kSirTarget) <= kSirTol,
          fmt("bss-eval oracle: %d instances, worst relative energy gap %.2e (tol %.0e); analytic SIR %.4f dB "
              "(want %.2f +- %.2f)",
              kBssInstances, worst, kBssTol, sir, kSirTarget, kSirTol)};
}

Outcome nmf_monotone() {
  std::mt19937_64 rng(kSeed + 6);
  std::uniform_int_distribution<int> rows(5, 60), cols(5, 80), rank(1, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rise = 0.0;
  int violations = 0;
  for (int k = 0; k < kNmfMatrices; ++k) {
    Matrix v(rows(rng), cols(rng));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng) < 0.1 ? 0.0 : std::pow(u(rng), 3.0) * 10.0;
    if (v.sum() == 0.0) v(0) = 1.0;
    const NmfTrainResult r = nmf_train(v, rank(rng), kNmfUpdates, rng());
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      const double rise = (r.objective[i] - r.objective[i - 1]) / std::max(1.0, r.objective[i - 1]);
      worst_rise = std::max(worst_rise, rise);
      if (rise > kNmfSlack) ++violations;
    }
  }
  return {violations == 0, fmt("nmf monotonicity: %d matrices x %d updates, %d rises above slack %.0e, largest "
                               "relative rise %.2e",
                               kNmfMatrices, kNmfUpdates, violations, kNmfSlack, worst_rise)};
}

// ---------------------------------------------------------------- 7 to 10

const char* kE2eConfig = R"(
[task]
seed = 1
[corpus]
generators = disjoint_band_noise
clip_seconds = 2
n_train = 16
n_dev = 2
n_test = 4
snr_db = 0
[stft]
fft_size = 1024
hop = 512
[model]
kind = drnn
hidden = 300,300
recurrence = dnn
[loss]
gamma = 0
joint_mask = true
[optimizer]
max_iterations = 300

[variant dnn]

[variant irm]
model.kind = irm
)";

const char* kOrderingConfig = R"(
[task]
seed = 1
[corpus]
generators = harmonic_vs_percussive
clip_seconds = 2
n_train = 96
n_dev = 4
n_test = 8
snr_db = 0
[stft]
fft_size = 1024
hop = 512
[model]
kind = drnn
hidden = 300,300
recurrence = dnn
[loss]
gamma = 0
joint_mask = true
[optimizer]
max_iterations = 300
[nmf]
basis_count = 20

[variant joint]

[variant separate]
loss.joint_mask = false

[variant discriminative]
loss.gamma = 0.05

[variant nmf]
model.kind = nmf
)";

const char* kMismatchConfig = R"(
[task]
seed = 1
[corpus]
generators = disjoint_band_noise, harmonic_vs_percussive
clip_seconds = 2
n_train = 24
n_dev = 2
n_test = 4
snr_db = 0
[stft]
fft_size = 1024
hop = 512
[model]
kind = drnn
hidden = 300,300
recurrence = dnn
[loss]
gamma = 0
joint_mask = true
[optimizer]
max_iterations = 150

[variant dnn]

[condition matched]

[condition held_out]
generators = chirps
)";

/// Mean over both sources of a summary column for one model and condition.
double summary_mean(const io::CsvTable& t, const std::string& model, const std::string& condition,
                    const std::string& column) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t r = 0; r < t.size(); ++r)
    if (t.at(r, "model") == model && t.at(r, "condition") == condition && t.at(r, "status") != "failed") {
      sum += std::stod(t.at(r, column));
      ++n;
    }
  if (n != 2) throw InputError("summary has " + std::to_string(n) + " rows for " + model + "/" + condition);
  return sum / n;
}

double summary_value(const io::CsvTable& t, const std::string& model, const std::string& source,
                     const std::string& column) {
  for (std::size_t r = 0; r < t.size(); ++r)
    if (t.at(r, "model") == model && t.at(r, "source") == source) return std::stod(t.at(r, column));
  throw InputError("summary has no row for " + model + "/" + source);
}

struct SweepRun {
  io::CsvTable summary;
  double seconds = 0.0;
};

SweepRun run_named_sweep(const char* text, const fs::path& dir) {
  fs::remove_all(dir);
  const auto t0 = Clock::now();
  const SweepResult r = run_sweep(SweepConfig::parse(text, dir.filename().string()), dir);
  if (!r.failures.empty()) throw std::runtime_error("variant " + r.failures[0].variant + ": " + r.failures[0].message);
  return {r.summary, seconds_since(t0)};
}

Outcome end_to_end(const fs::path& dir) {
  const SweepRun run = run_named_sweep(kE2eConfig, dir);
  const double d1 = summary_value(run.summary, "dnn", "source1", "gsdr");
  const double d2 = summary_value(run.summary, "dnn", "source2", "gsdr");
  const double i1 = summary_value(run.summary, "irm", "source1", "gsdr");
  const double i2 = summary_value(run.summary, "irm", "source2", "gsdr");
  const double minutes = run.seconds / 60.0;
  const bool pass = std::min(d1, d2) >= kE2eSdr && std::min(i1, i2) >= kE2eIrmSdr && minutes < kE2eMinutes;
  return {pass, fmt("end-to-end: dnn SDR %.2f / %.2f dB (want >= %.0f), irm SDR %.2f / %.2f dB (want >= %.0f), "
                    "%.1f min (limit %.0f)",
                    d1, d2, kE2eSdr, i1, i2, kE2eIrmSdr, minutes, kE2eMinutes)};
}

Outcome orderings(const fs::path& dir) {
  const SweepRun run = run_named_sweep(kOrderingConfig, dir);
  const io::CsvTable& t = run.summary;
  const double joint = summary_mean(t, "joint", "matched", "gsdr");
  const double separate = summary_mean(t, "separate", "matched", "gsdr");
  const double nmf = summary_mean(t, "nmf", "matched", "gsdr");
  const double sir0 = summary_mean(t, "joint", "matched", "gsir");
  const double sir5 = summary_mean(t, "discriminative", "matched", "gsir");
  const double a = joint - separate, b = sir5 - sir0, c = joint - nmf;
  const bool pass = a > kOrderingMargin && b > 0.0 && c > kOrderingMargin;
  return {pass, fmt("orderings: (a) joint - separate SDR %+.2f dB (want > %+.0f); (b) SIR gamma 0.05 - gamma 0 "
                    "%+.2f dB (want > 0); (c) dnn - nmf SDR %+.2f dB (want > %+.0f); %.1f min",
                    a, kOrderingMargin, b, c, kOrderingMargin, run.seconds / 60.0)};
}

Outcome mismatch(const fs::path& dir) {
  const SweepRun run = run_named_sweep(kMismatchConfig, dir);
  const double seen = summary_mean(run.summary, "dnn", "matched", "gsdr");
  const double unseen = summary_mean(run.summary, "dnn", "held_out", "gsdr");
  return {unseen < seen, fmt("mismatch: mean SDR %.2f dB on held-out chirps vs %.2f dB on the training generators "
                             "(want strictly lower); %.1f min",
                             unseen, seen, run.seconds / 60.0)};
}

/// Relative paths of every CSV file under `root`.
std::set<std::string> csv_files(const fs::path& root) {
  std::set<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".csv") out.insert(fs::relative(e.path(), root).string());
  return out;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A training log with its wall-clock column removed.
std::string log_without_timing(const fs::path& p) {
  const io::CsvTable t = io::CsvTable::read(p);
  const auto& h = t.header();
  const auto skip = static_cast<std::size_t>(std::find(h.begin(), h.end(), "elapsed_ms") - h.begin());
  std::string out;
  const auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i)
      if (i != skip) out += row[i] + ",";
    out += "\n";
  };
  line(h);
  for (const auto& row : t.rows()) line(row);
  return out;
}

Outcome determinism(const fs::path& first, const fs::path& second) {
  const char* names[] = {"end_to_end", "orderings", "mismatch"};
  const char* configs[] = {kE2eConfig, kOrderingConfig, kMismatchConfig};
  int compared = 0, differing = 0, logs = 0;
  std::string first_diff;
  for (int k = 0; k < 3; ++k) {
    run_named_sweep(configs[k], second / names[k]);
    const auto a = csv_files(first / names[k]), b = csv_files(second / names[k]);
    if (a != b) {
      ++differing;
      if (first_diff.empty()) first_diff = std::string(names[k]) + ": different CSV file sets";
      continue;
    }
    for (const auto& rel : a) {
      ++compared;
      const fs::path pa = first / names[k] / rel, pb = second / names[k] / rel;
      const bool timed = pa.filename() == kTrainLogFile;
      logs += timed;
      const bool same = timed ? log_without_timing(pa) == log_without_timing(pb) : read_bytes(pa) == read_bytes(pb);
      if (!same) {
        ++differing;
        if (first_diff.empty()) first_diff = std::string(names[k]) + "/" + rel;
      }
    }
  }
  return {differing == 0 && compared > 0,
          fmt("determinism: %d CSV files compared across two runs, %d differ%s%s (%d training logs compared "
              "without elapsed_ms)",
              compared, differing, first_diff.empty() ? "" : "; first: ", first_diff.c_str(), logs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run: one PASS/FAIL line per criterion"};
  std::string out = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--out", out, "Working directory for corpora and models")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const fs::path root = fs::absolute(out);
  const fs::path run1 = root / "run1", run2 = root / "run2";
  const auto wanted = [&only](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, gradient_oracle},
      {2, mask_sum},
      {3, objective_degeneracy},
      {4, stft_round_trip},
      {5, bss_oracle},
      {6, nmf_monotone},
      {7, [&] { return end_to_end(run1 / "end_to_end"); }},
      {8, [&] { return orderings(run1 / "orderings"); }},
      {9, [&] { return mismatch(run1 / "mismatch"); }},
      {10, [&] { return determinism(run1, run2); }},
  };

  int failed = 0;
  for (const auto& [k, fn] : criteria) {
    if (!wanted(k)) continue;
    if (k == 10 && !(wanted(7) && wanted(8) && wanted(9))) {
      std::cout << "FAIL criterion 10: needs criteria 7, 8 and 9 in the same run" << std::endl;
      ++failed;
      continue;
    }
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
