// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drnnsep/common.hpp"
#include "drnnsep/signal/features.hpp"
#include "drnnsep/signal/stft.hpp"

namespace drnnsep {

enum class RecurrenceKind { none, at_layer, all_layers };

/// Where temporal connections live. `layer` is 1-based and only meaningful
/// for RecurrenceKind::at_layer.
struct Recurrence {
  RecurrenceKind kind = RecurrenceKind::none;
  int layer = 0;

  static Recurrence none() { return {}; }
  static Recurrence at(int l) { return {RecurrenceKind::at_layer, l}; }
  static Recurrence all() { return {RecurrenceKind::all_layers, 0}; }
  bool operator==(const Recurrence&) const = default;
};

/// "dnn", "drnn-<l>" or "srnn".
inline std::string to_string(const Recurrence& r) {
  switch (r.kind) {
    case RecurrenceKind::none: return "dnn";
    case RecurrenceKind::at_layer: return "drnn-" + std::to_string(r.layer);
    case RecurrenceKind::all_layers: return "srnn";
  }
  return "?";
}

inline Recurrence parse_recurrence(const std::string& s) {
  if (s == "dnn" || s == "none") return Recurrence::none();
  if (s == "srnn" || s == "all") return Recurrence::all();
  if (s.rfind("drnn-", 0) == 0) {
    try {
      std::size_t used = 0;
      const int l = std::stoi(s.substr(5), &used);
      if (used == s.size() - 5) return Recurrence::at(l);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown recurrence '" + s + "' (expected dnn, drnn-<l> or srnn)");
}

/// Layer widths [D_in, m_1, ..., m_L, 2F] plus the recurrence pattern. Hidden
/// layers use the rectifier; the output layer is linear.
struct Architecture {
  std::vector<int> layer_sizes;
  Recurrence recurrence;

  static Architecture make(int input_dim, const std::vector<int>& hidden, int bins,
                           Recurrence rec = Recurrence::none()) {
    Architecture a;
    a.layer_sizes.push_back(input_dim);
    a.layer_sizes.insert(a.layer_sizes.end(), hidden.begin(), hidden.end());
    a.layer_sizes.push_back(2 * bins);
    a.recurrence = rec;
    a.validate();
    return a;
  }

  int hidden_layers() const { return static_cast<int>(layer_sizes.size()) - 2; }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int bins() const { return output_dim() / 2; }

  /// Whether hidden layer `l` (1-based) has a recurrent matrix.
  bool recurrent(int l) const {
    switch (recurrence.kind) {
      case RecurrenceKind::none: return false;
      case RecurrenceKind::at_layer: return l == recurrence.layer;
      case RecurrenceKind::all_layers: return l >= 1 && l <= hidden_layers();
    }
    return false;
  }

  void validate() const {
    if (layer_sizes.size() < 3) throw ConfigError("architecture needs at least one hidden layer");
    for (int s : layer_sizes)
      if (s < 1) throw ConfigError("layer sizes must be positive");
    if (output_dim() % 2 != 0) throw ConfigError("output size must be 2F");
    if (recurrence.kind == RecurrenceKind::at_layer &&
        (recurrence.layer < 1 || recurrence.layer > hidden_layers()))
      throw ConfigError(detail::concat("recurrent layer ", recurrence.layer, " outside 1..",
                                       hidden_layers()));
  }

  bool operator==(const Architecture&) const = default;
};

/// Offsets of one layer's blocks inside the flat parameter vector. Layer k
/// (0-based) maps layer_sizes[k] -> layer_sizes[k+1]; its blocks are stored as
/// W (row-major, out x in), then U (row-major, out x out) when recurrent, then b.
struct LayerBlocks {
  int in = 0;
  int out = 0;
  bool recurrent = false;
  std::size_t w = 0;
  std::size_t u = 0;
  std::size_t b = 0;
};

inline std::vector<LayerBlocks> parameter_layout(const Architecture& arch) {
  std::vector<LayerBlocks> layout;
  std::size_t offset = 0;
  for (int k = 0; k + 1 < static_cast<int>(arch.layer_sizes.size()); ++k) {
    LayerBlocks l;
    l.in = arch.layer_sizes[k];
    l.out = arch.layer_sizes[k + 1];
    l.recurrent = arch.recurrent(k + 1);
    l.w = offset;
    offset += static_cast<std::size_t>(l.out) * l.in;
    l.u = offset;
    if (l.recurrent) offset += static_cast<std::size_t>(l.out) * l.out;
    l.b = offset;
    offset += static_cast<std::size_t>(l.out);
    layout.push_back(l);
  }
  return layout;
}

inline std::size_t parameter_count(const Architecture& arch) {
  const auto layout = parameter_layout(arch);
  return layout.back().b + static_cast<std::size_t>(layout.back().out);
}

/// Signal front end a model was trained with; checked again at inference.
struct FrontEnd {
  StftConfig stft;
  FeatureConfig features;
  int sample_rate = 16000;
  bool operator==(const FrontEnd&) const = default;
};

/// Network parameters in one flat vector plus typed views onto each block.
class DrnnModel {
 public:
  using ConstMap = Eigen::Map<const RowMajorMatrix>;
  using MutMap = Eigen::Map<RowMajorMatrix>;

  DrnnModel() = default;

  /// All-zero parameters.
  explicit DrnnModel(Architecture arch, FrontEnd frontend = {})
      : arch_(std::move(arch)), frontend_(std::move(frontend)) {
    arch_.validate();
    layout_ = parameter_layout(arch_);
    params_ = Vector::Zero(static_cast<Eigen::Index>(parameter_count(arch_)));
  }

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)) from a seeded
  /// mt19937_64, drawn block by block in storage order; biases zero.
  static DrnnModel initialized(Architecture arch, std::uint64_t seed, FrontEnd frontend = {}) {
    DrnnModel m(std::move(arch), std::move(frontend));
    std::mt19937_64 rng(seed);
    for (const auto& l : m.layout_) {
      const double wr = std::sqrt(6.0 / (l.in + l.out));
      std::uniform_real_distribution<double> wd(-wr, wr);
      for (std::size_t i = 0; i < static_cast<std::size_t>(l.out) * l.in; ++i)
        m.params_[static_cast<Eigen::Index>(l.w + i)] = wd(rng);
      if (l.recurrent) {
        const double ur = std::sqrt(6.0 / (2.0 * l.out));
        std::uniform_real_distribution<double> ud(-ur, ur);
        for (std::size_t i = 0; i < static_cast<std::size_t>(l.out) * l.out; ++i)
          m.params_[static_cast<Eigen::Index>(l.u + i)] = ud(rng);
      }
    }
    return m;
  }

  const Architecture& architecture() const { return arch_; }
  const FrontEnd& frontend() const { return frontend_; }
  void set_frontend(const FrontEnd& f) { frontend_ = f; }
  const std::vector<LayerBlocks>& layout() const { return layout_; }

  const Vector& parameters() const { return params_; }
  Vector& parameters() { return params_; }
  void set_parameters(const Vector& p) {
    if (p.size() != params_.size())
      throw DimensionError(detail::concat("parameter vector has ", p.size(), " entries, expected ",
                                          params_.size()));
    params_ = p;
  }

  /// Number of weight layers (hidden layers + output layer).
  int num_layers() const { return static_cast<int>(layout_.size()); }

  ConstMap weight(int k) const { return {ptr(layout_[k].w), layout_[k].out, layout_[k].in}; }
  MutMap weight(int k) { return {mut(layout_[k].w), layout_[k].out, layout_[k].in}; }
  ConstMap recurrent(int k) const {
    return {ptr(layout_[k].u), layout_[k].recurrent ? layout_[k].out : 0,
            layout_[k].recurrent ? layout_[k].out : 0};
  }
  MutMap recurrent(int k) {
    return {mut(layout_[k].u), layout_[k].recurrent ? layout_[k].out : 0,
            layout_[k].recurrent ? layout_[k].out : 0};
  }
  Eigen::Map<const Vector> bias(int k) const { return {ptr(layout_[k].b), layout_[k].out}; }
  Eigen::Map<Vector> bias(int k) { return {mut(layout_[k].b), layout_[k].out}; }

 private:
  const double* ptr(std::size_t off) const { return params_.data() + off; }
  double* mut(std::size_t off) { return params_.data() + off; }

  Architecture arch_;
  FrontEnd frontend_;
  std::vector<LayerBlocks> layout_;
  Vector params_;
};

}  // namespace drnnsep
