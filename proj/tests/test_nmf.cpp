// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "drnnsep/nmf/basis_io.hpp"
#include "drnnsep/nmf/nmf.hpp"
#include "test_util.hpp"

namespace drnnsep {
namespace {

using testing::random_matrix;

// Direct double loop, no Eigen expressions.
double kl_oracle(const Matrix& v, const Matrix& l) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      d += (v(i, j) == 0.0 ? 0.0 : v(i, j) * std::log(v(i, j) / l(i, j))) - v(i, j) + l(i, j);
  return d;
}

TEST(KlDivergence, MatchesOracleAndIsZeroOnEquality) {
  std::mt19937_64 rng(1);
  Matrix v = random_matrix(6, 5, rng, 0, 2), l = random_matrix(6, 5, rng, 0.1, 2);
  v(0, 0) = 0.0;
  EXPECT_NEAR(kl_divergence(v, l), kl_oracle(v, l), 1e-12);
  EXPECT_NEAR(kl_divergence(l, l), 0.0, 1e-14);
  EXPECT_GE(kl_divergence(v, l), 0.0);
}

TEST(NmfTrain, RankOneIsRecoveredExactly) {
  std::mt19937_64 rng(2);
  const Vector a = random_matrix(20, 1, rng, 0.1, 1), b = random_matrix(30, 1, rng, 0.1, 1);
  const Matrix v = a * b.transpose();
  const NmfTrainResult r = nmf_train(v, 1, 200, 5);
  const double d = kl_divergence(v, r.basis.vectors * r.activations);
  EXPECT_LT(d, 1e-8 * v.sum());
  EXPECT_NEAR(r.basis.vectors.sum(), 1.0, 1e-12);
}

TEST(NmfTrain, ObjectiveIsNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const Matrix v = random_matrix(15, 25, rng, 0, 3);
    const NmfTrainResult r = nmf_train(v, 4, 100, seed + 1);
    ASSERT_EQ(r.objective.size(), 101u);
    for (std::size_t i = 1; i < r.objective.size(); ++i)
      EXPECT_LE(r.objective[i], r.objective[i - 1] + 1e-10) << "seed " << seed << " iteration " << i;
  }
}

TEST(NmfTrain, BasisIsNormalisedNonNegativeAndProductUnchanged) {
  std::mt19937_64 rng(3);
  const Matrix v = random_matrix(12, 18, rng, 0, 1);
  const NmfTrainResult r = nmf_train(v, 3, 50, 2);
  EXPECT_GE(r.basis.vectors.minCoeff(), 0.0);
  EXPECT_GE(r.activations.minCoeff(), 0.0);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(r.basis.vectors.col(c).sum(), 1.0, 1e-12);
  // Normalisation moves scale into H without changing BH.
  EXPECT_NEAR(kl_divergence(v, r.basis.vectors * r.activations), r.objective.back(), 1e-9 * r.objective.back());
}

TEST(NmfTrain, ErrorsAndDeterminism) {
  std::mt19937_64 rng(4);
  const Matrix v = random_matrix(5, 5, rng, 0, 1);
  EXPECT_THROW(nmf_train(v, 0), ConfigError);
  EXPECT_THROW(nmf_train(Matrix::Zero(5, 5), 2), InputError);
  Matrix neg = v;
  neg(1, 1) = -0.1;
  EXPECT_THROW(nmf_train(neg, 2), InputError);
  EXPECT_EQ(nmf_train(v, 2, 30, 9).basis.vectors, nmf_train(v, 2, 30, 9).basis.vectors);
}

TEST(NmfSeparate, DisjointSupportSeparatesCleanly) {
  std::mt19937_64 rng(5);
  // B1 lives on bins 0..9, B2 on bins 10..19.
  NmfBasis b1{Matrix::Zero(20, 3)}, b2{Matrix::Zero(20, 3)};
  b1.vectors.topRows(10) = random_matrix(10, 3, rng, 0.1, 1);
  b2.vectors.bottomRows(10) = random_matrix(10, 3, rng, 0.1, 1);
  const Matrix h = random_matrix(3, 15, rng, 0.1, 2);
  const Matrix mix = b1.vectors * h;
  const NmfSeparation s = nmf_separate(mix, b1, b2, 100, 1);
  const double ratio = 10.0 * std::log10(s.source1.squaredNorm() / std::max(s.source2.squaredNorm(), 1e-300));
  EXPECT_GT(ratio, 30.0);
  EXPECT_LT((s.source1 + s.source2 - mix).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(NmfSeparate, SumsToMixtureAndIsMonotone) {
  std::mt19937_64 rng(6);
  const NmfBasis b1{random_matrix(16, 4, rng, 0, 1)}, b2{random_matrix(16, 5, rng, 0, 1)};
  const Matrix mix = random_matrix(16, 20, rng, 0, 2);
  const NmfSeparation s = nmf_separate(mix, b1, b2, 100, 3);
  EXPECT_LT((s.source1 + s.source2 - mix).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GE(s.source1.minCoeff(), 0.0);
  EXPECT_GE(s.source2.minCoeff(), -1e-12);
  EXPECT_GE(s.activations.minCoeff(), 0.0);
  for (std::size_t i = 1; i < s.objective.size(); ++i) EXPECT_LE(s.objective[i], s.objective[i - 1] + 1e-10);
}

TEST(NmfSeparate, ZeroMixtureAndShapeErrors) {
  std::mt19937_64 rng(7);
  const NmfBasis b1{random_matrix(8, 2, rng, 0, 1)}, b2{random_matrix(8, 2, rng, 0, 1)};
  const NmfSeparation s = nmf_separate(Matrix::Zero(8, 6), b1, b2);
  EXPECT_EQ(s.source1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.source2.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(nmf_separate(Matrix::Zero(9, 6), b1, b2), DimensionError);
}

TEST(NmfModelFile, RoundTripAndCorruption) {
  testing::TempDir dir("nmf");
  std::mt19937_64 rng(8);
  NmfModel m;
  m.source1.vectors = random_matrix(9, 3, rng, 0, 1);
  m.source2.vectors = random_matrix(9, 5, rng, 0, 1);
  m.frontend.stft = StftConfig{16, 8, Window::hann};
  save_nmf_model(m, dir / "b.nmf");
  const NmfModel back = load_nmf_model(dir / "b.nmf");
  EXPECT_EQ(back.source1.vectors, m.source1.vectors);
  EXPECT_EQ(back.source2.vectors, m.source2.vectors);
  EXPECT_EQ(back.frontend, m.frontend);
  auto bytes = io::read_bytes(dir / "b.nmf");
  bytes[bytes.size() - 10] ^= 1;
  std::ofstream(dir / "c.nmf", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                      static_cast<std::streamsize>(bytes.size()));
  EXPECT_THROW(load_nmf_model(dir / "c.nmf"), FormatError);
}

}  // namespace
}  // namespace drnnsep
