// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "drnnsep/eval/bss_eval.hpp"
#include "drnnsep/io/csv.hpp"
#include "test_util.hpp"

namespace drnnsep {
namespace {

using testing::random_clip;

AudioClip from(const Vector& v) {
  AudioClip c;
  c.samples.assign(v.data(), v.data() + v.size());
  return c;
}

// Two orthonormal sources built by Gram-Schmidt on random vectors.
std::pair<Vector, Vector> orthonormal_pair(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix r = testing::random_matrix(n, 2, rng);
  Vector a = r.col(0).normalized();
  Vector b = r.col(1) - a.dot(r.col(1)) * a;
  return {a, b.normalized()};
}

// Normal-equations projection: solve (S'S) c = S'e explicitly.
Vector normal_equations_projection(const Matrix& s, const Vector& e) {
  const Matrix gram = s.transpose() * s;
  const Vector rhs = s.transpose() * e;
  return s * gram.inverse() * rhs;
}

TEST(BssEval, PerfectEstimateHitsCap) {
  const AudioClip s1 = random_clip(800, 1), s2 = random_clip(800, 2);
  const SeparationScores sc = bss_eval(s1, {s1, s2}, 0);
  EXPECT_EQ(sc.sdr, kDbCap);
  EXPECT_EQ(sc.sir, kDbCap);
  EXPECT_EQ(sc.sar, kDbCap);
  EXPECT_EQ(sc.clip_len, 800u);
}

TEST(BssEval, OrthonormalLeakageGivesTwentyDb) {
  const auto [a, b] = orthonormal_pair(500, 3);
  for (double beta : {0.1, 0.01}) {
    const SeparationScores sc = bss_eval(from(a + beta * b), {from(a), from(b)}, 0);
    EXPECT_NEAR(sc.sir, -20.0 * std::log10(beta), 1e-9);
    EXPECT_NEAR(sc.sdr, -20.0 * std::log10(beta), 1e-9);
    EXPECT_EQ(sc.sar, kDbCap);
  }
}

TEST(BssEval, DecompositionMatchesNormalEquationsOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix s = testing::random_matrix(300, 2, rng);
    const Vector e = testing::random_matrix(300, 1, rng);
    const std::vector<std::span<const double>> refs{std::span(s.col(0).data(), 300), std::span(s.col(1).data(), 300)};
    const BssDecomposition d = bss_decompose(std::span(e.data(), 300), refs, 1);
    const Vector s2 = s.col(1);
    const Vector target = (e.dot(s2) / s2.squaredNorm()) * s2;
    const Vector in_span = normal_equations_projection(s, e);
    const Vector interf = in_span - target, artif = e - in_span;
    EXPECT_NEAR(d.target_energy(), target.squaredNorm(), 1e-9 * target.squaredNorm());
    EXPECT_NEAR(d.interference_energy(), interf.squaredNorm(), 1e-9 * interf.squaredNorm());
    EXPECT_NEAR(d.artifact_energy(), artif.squaredNorm(), 1e-9 * artif.squaredNorm());
    // Orthogonal decomposition conserves energy.
    const double total = d.target_energy() + d.interference_energy() + d.artifact_energy();
    EXPECT_NEAR(total, e.squaredNorm(), 1e-9 * e.squaredNorm());
  }
}

TEST(BssEval, SirIsScaleInvariant) {
  const AudioClip s1 = random_clip(400, 4), s2 = random_clip(400, 5), e = random_clip(400, 6);
  const SeparationScores base = bss_eval(e, {s1, s2}, 0);
  const SeparationScores same = bss_eval(e, {s1, s2}, 0);
  EXPECT_EQ(base.sdr, same.sdr);
  EXPECT_EQ(base.sir, same.sir);
  EXPECT_EQ(base.sar, same.sar);
  for (double alpha : {0.5, 2.0, 1024.0}) {
    AudioClip scaled = e;
    for (auto& x : scaled.samples) x *= alpha;
    EXPECT_NEAR(bss_eval(scaled, {s1, s2}, 0).sir, base.sir, 1e-9);
  }
}

TEST(BssEval, Errors) {
  const AudioClip s1 = random_clip(100, 1), s2 = random_clip(100, 2);
  AudioClip silent;
  silent.samples.assign(100, 0.0);
  EXPECT_THROW(bss_eval(s1, {silent, s2}, 0), InputError);
  EXPECT_THROW(bss_eval(random_clip(99, 3), {s1, s2}, 0), DimensionError);
  EXPECT_THROW(bss_eval(s1, {s1, s2}, 2), ConfigError);
  AudioClip other_rate = s1;
  other_rate.sample_rate = 8000;
  EXPECT_THROW(bss_eval(other_rate, {s1, s2}, 0), ConfigError);
}

TEST(Nsdr, Identities) {
  const AudioClip v = random_clip(600, 7), n = random_clip(600, 8);
  AudioClip x = v;
  for (std::size_t i = 0; i < x.size(); ++i) x.samples[i] += n.samples[i];
  EXPECT_NEAR(nsdr(x, v, x), 0.0, 1e-12);
  const double base = sdr_against_mixture(x, v, x);
  EXPECT_NEAR(nsdr(v, v, x), kDbCap - base, 1e-9);
  EXPECT_GT(nsdr(v, v, x), 0.0);
  EXPECT_THROW(nsdr(v, v, random_clip(500, 1)), DimensionError);
}

TEST(Nsdr, IsSdrDifference) {
  const auto [a, b] = orthonormal_pair(400, 9);
  // Mixture a + b has SDR 0 dB for a; estimate a + 0.25 b has SDR 12.04 dB.
  const AudioClip v = from(a), x = from(a + b), est = from(a + 0.25 * b);
  EXPECT_NEAR(sdr_against_mixture(x, v, x), 0.0, 1e-9);
  EXPECT_NEAR(nsdr(est, v, x), -20.0 * std::log10(0.25), 1e-9);
}

TEST(GlobalScores, WeightedMeans) {
  std::vector<ClipScore> two{{2.0, 0, 0, 4, 0}, {4.0, 0, 0, 8, 0}};
  EXPECT_NEAR(global_scores(two).gnsdr, 40.0 / 12.0, 1e-12);
  std::vector<ClipScore> one{{1.5, 2.5, 3.5, 10, 4.5}};
  const GlobalScores g1 = global_scores(one);
  EXPECT_EQ(g1.gnsdr, 1.5);
  EXPECT_EQ(g1.gsir, 2.5);
  EXPECT_EQ(g1.gsar, 3.5);
  EXPECT_EQ(g1.gsdr, 4.5);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-5, 15);
  std::vector<ClipScore> equal;
  double mean = 0.0;
  for (int i = 0; i < 7; ++i) {
    equal.push_back({u(rng), u(rng), u(rng), 100, 0});
    mean += equal.back().nsdr / 7.0;
  }
  EXPECT_NEAR(global_scores(equal).gnsdr, mean, 1e-12);
  std::vector<ClipScore> same{{3.0, 1, 2, 5, 0}, {3.0, 1, 2, 500, 0}, {3.0, 1, 2, 17, 0}};
  EXPECT_NEAR(global_scores(same).gnsdr, 3.0, 1e-12);
  EXPECT_THROW(global_scores(std::vector<ClipScore>{}), InputError);
  EXPECT_THROW(global_scores(std::vector<ClipScore>{{1, 1, 1, 0, 1}}), InputError);
}

TEST(Csv, QuotingRoundTrip) {
  io::CsvTable t({"id", "text", "value"});
  t.add_row({"a", "plain", io::format_number(0.1)});
  t.add_row({"b", "with, comma", io::format_number(-1e-300)});
  t.add_row({"c", "with \"quotes\"\nand newline", io::format_number(200.0)});
  const std::string text = t.str();
  EXPECT_NE(text.find("\"with, comma\""), std::string::npos);
  EXPECT_NE(text.find("\"with \"\"quotes\"\""), std::string::npos);
  const io::CsvTable back = io::CsvTable::parse(text);
  EXPECT_EQ(back.header(), t.header());
  EXPECT_EQ(back.rows(), t.rows());
  EXPECT_EQ(io::parse_number(back.at(0, "value"), "v"), 0.1);
  EXPECT_EQ(io::parse_number(back.at(1, "value"), "v"), -1e-300);
  EXPECT_THROW(t.add_row({"too", "short"}), FormatError);
  EXPECT_THROW(back.column("missing"), FormatError);
  EXPECT_THROW(io::CsvTable::parse("a,b\n\"open"), FormatError);
  EXPECT_THROW(io::parse_number("1.5x", "v"), FormatError);
}

}  // namespace
}  // namespace drnnsep
