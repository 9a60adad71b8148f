// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>

#include "drnnsep/io/container.hpp"
#include "drnnsep/model/serialize.hpp"
#include "drnnsep/nmf/nmf.hpp"

namespace drnnsep {

inline constexpr const char* kBasisMagic = "NMFBASE1";
inline constexpr const char* kBasisFormatVersion = "1.0";

/// Bases for both sources plus the front end they were learned with.
struct NmfModel {
  NmfBasis source1;
  NmfBasis source2;
  FrontEnd frontend;
};

/// Same container as model files; values are B1 then B2, each row-major F x K.
inline void save_nmf_model(const NmfModel& m, const std::filesystem::path& path) {
  nlohmann::json h = frontend_to_json(m.frontend);
  h["format_version"] = kBasisFormatVersion;
  h["bins"] = m.source1.bins();
  h["basis_counts"] = {m.source1.count(), m.source2.count()};
  io::Container c;
  c.header = h.dump();
  for (const NmfBasis* b : {&m.source1, &m.source2}) {
    const RowMajorMatrix rm = b->vectors;
    c.values.insert(c.values.end(), rm.data(), rm.data() + rm.size());
  }
  io::write_container(path, kBasisMagic, c);
}

inline NmfModel load_nmf_model(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, kBasisMagic);
  const std::string name = path.string();
  try {
    const auto h = nlohmann::json::parse(c.header);
    io::check_format_version(h.at("format_version").get<std::string>(), 1, name);
    NmfModel m;
    m.frontend = frontend_from_json(h);
    const int bins = h.at("bins").get<int>();
    const auto counts = h.at("basis_counts").get<std::vector<int>>();
    if (counts.size() != 2 || bins < 1 || counts[0] < 1 || counts[1] < 1)
      throw FormatError(name + ": bad basis dimensions");
    const std::size_t need = static_cast<std::size_t>(bins) * (counts[0] + counts[1]);
    if (c.values.size() != need) throw FormatError(name + ": value block size mismatch");
    const double* p = c.values.data();
    m.source1.vectors = Eigen::Map<const RowMajorMatrix>(p, bins, counts[0]);
    m.source2.vectors = Eigen::Map<const RowMajorMatrix>(p + static_cast<std::size_t>(bins) * counts[0], bins, counts[1]);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": bad header: " + e.what());
  }
}

}  // namespace drnnsep
