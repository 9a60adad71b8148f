// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "drnnsep/io/container.hpp"
#include "drnnsep/model/drnn.hpp"

namespace drnnsep {

inline constexpr const char* kModelMagic = "DRNNSEP1";
inline constexpr const char* kModelFormatVersion = "1.0";
inline constexpr int kModelFormatMajor = 1;

inline nlohmann::json frontend_to_json(const FrontEnd& f) {
  return {{"stft", {{"fft_size", f.stft.fft_size}, {"hop", f.stft.hop}, {"window", to_string(f.stft.window)}}},
          {"feature_kind", to_string(f.features.kind)},
          {"context_frames", f.features.context_frames},
          {"n_mels", f.features.n_mels},
          {"sample_rate", f.sample_rate}};
}

inline FrontEnd frontend_from_json(const nlohmann::json& j) {
  FrontEnd f;
  f.stft.fft_size = j.at("stft").at("fft_size").get<int>();
  f.stft.hop = j.at("stft").at("hop").get<int>();
  f.stft.window = parse_window(j.at("stft").at("window").get<std::string>());
  f.features.kind = parse_feature_kind(j.at("feature_kind").get<std::string>());
  f.features.context_frames = j.at("context_frames").get<int>();
  f.features.n_mels = j.at("n_mels").get<int>();
  f.sample_rate = j.at("sample_rate").get<int>();
  return f;
}

inline std::vector<unsigned char> encode_model(const DrnnModel& model) {
  const Architecture& arch = model.architecture();
  nlohmann::json h = frontend_to_json(model.frontend());
  h["format_version"] = kModelFormatVersion;
  h["layer_sizes"] = arch.layer_sizes;
  h["recurrence"] = to_string(arch.recurrence);
  h["bins"] = arch.bins();
  h["parameter_count"] = model.parameters().size();
  h["parameter_order"] = "per layer: W row-major (out x in), U row-major if recurrent, b";
  io::Container c;
  c.header = h.dump();
  c.values.assign(model.parameters().data(), model.parameters().data() + model.parameters().size());
  return io::encode_container(kModelMagic, c);
}

inline DrnnModel decode_model(std::span<const unsigned char> bytes, const std::string& name = "model") {
  const io::Container c = io::decode_container(kModelMagic, bytes, name);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(c.header);
    io::check_format_version(h.at("format_version").get<std::string>(), kModelFormatMajor, name);
    Architecture arch;
    arch.layer_sizes = h.at("layer_sizes").get<std::vector<int>>();
    arch.recurrence = parse_recurrence(h.at("recurrence").get<std::string>());
    DrnnModel model(arch, frontend_from_json(h));
    if (h.at("parameter_count").get<std::size_t>() != c.values.size() ||
        static_cast<std::size_t>(model.parameters().size()) != c.values.size())
      throw FormatError(name + ": parameter block size does not match the architecture");
    model.set_parameters(Eigen::Map<const Vector>(c.values.data(), static_cast<Eigen::Index>(c.values.size())));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": bad header: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(name + ": bad header: " + e.what());
  }
}

inline void save_model(const DrnnModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

inline DrnnModel load_model(const std::filesystem::path& path) {
  return decode_model(io::read_bytes(path), path.string());
}

}  // namespace drnnsep
