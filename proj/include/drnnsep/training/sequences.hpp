// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <vector>

#include "drnnsep/common.hpp"

namespace drnnsep {

/// One training sequence; every matrix has one row per frame.
struct Sequence {
  Matrix inputs;  // T x D_in
  Matrix z;       // mixture magnitudes, T x F
  Matrix y1;      // source 1 magnitudes, T x F
  Matrix y2;      // source 2 magnitudes, T x F

  int frames() const { return static_cast<int>(inputs.rows()); }

  void validate() const {
    if (z.rows() != inputs.rows() || y1.rows() != inputs.rows() || y2.rows() != inputs.rows())
      throw DimensionError("sequence: frame counts differ");
    detail::require_same_shape(y1, z, "sequence targets");
    detail::require_same_shape(y2, z, "sequence targets");
    if ((z.array() < 0).any() || (y1.array() < 0).any() || (y2.array() < 0).any())
      throw InputError("sequence: magnitudes must be nonnegative");
  }
};

struct TrainingBatch {
  std::vector<Sequence> sequences;

  bool empty() const { return sequences.empty(); }
  std::size_t size() const { return sequences.size(); }
  long total_frames() const {
    long n = 0;
    for (const auto& s : sequences) n += s.frames();
    return n;
  }
};

inline constexpr int kDefaultMaxSequenceLength = 100;

/// Splits aligned arrays into consecutive, non-overlapping segments of at
/// most `max_len` frames and appends them to `batch`.
inline void append_chopped(TrainingBatch& batch, const Matrix& inputs, const Matrix& z, const Matrix& y1,
                           const Matrix& y2, int max_len = kDefaultMaxSequenceLength) {
  if (max_len < 1) throw ConfigError("max sequence length must be >= 1");
  if (z.rows() != inputs.rows() || y1.rows() != inputs.rows() || y2.rows() != inputs.rows())
    throw DimensionError("chop_sequences: frame counts differ");
  for (Eigen::Index start = 0; start < inputs.rows(); start += max_len) {
    const Eigen::Index len = std::min<Eigen::Index>(max_len, inputs.rows() - start);
    batch.sequences.push_back(Sequence{inputs.middleRows(start, len), z.middleRows(start, len),
                                       y1.middleRows(start, len), y2.middleRows(start, len)});
  }
}

inline TrainingBatch chop_sequences(const Matrix& inputs, const Matrix& z, const Matrix& y1,
                                    const Matrix& y2, int max_len = kDefaultMaxSequenceLength) {
  TrainingBatch batch;
  append_chopped(batch, inputs, z, y1, y2, max_len);
  return batch;
}

}  // namespace drnnsep
