// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "drnnsep/common.hpp"

namespace drnnsep::io {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

/// Layout:
///   magic   8 bytes
///   u64     header length n (little-endian)
///   n bytes UTF-8 header text
///   f64[]   values, little-endian
///   u32     CRC-32 (zlib polynomial) of every byte between magic and CRC
struct Container {
  std::string header;
  std::vector<double> values;
};

inline std::uint32_t crc32_of(std::span<const unsigned char> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = ::crc32(crc, bytes.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::vector<unsigned char> encode_container(const std::string& magic, const Container& c) {
  if (magic.size() != 8) throw ConfigError("container magic must be 8 bytes");
  std::vector<unsigned char> out(magic.begin(), magic.end());
  const auto append = [&out](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out.insert(out.end(), b, b + n);
  };
  const std::uint64_t hlen = c.header.size();
  append(&hlen, sizeof hlen);
  append(c.header.data(), c.header.size());
  append(c.values.data(), c.values.size() * sizeof(double));
  const std::uint32_t crc = crc32_of(std::span(out).subspan(8));
  append(&crc, sizeof crc);
  return out;
}

inline Container decode_container(const std::string& magic, std::span<const unsigned char> bytes,
                                  const std::string& name = "container") {
  const auto fail = [&](const std::string& why) { return FormatError(name + ": " + why); };
  if (bytes.size() < 8 || std::memcmp(bytes.data(), magic.data(), 8) != 0)
    throw fail("bad magic (expected " + magic + ")");
  if (bytes.size() < 8 + 8 + 4) throw fail("truncated file");
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 8, sizeof hlen);
  if (hlen > bytes.size() - 20) throw fail("truncated header");
  const std::size_t body = bytes.size() - 20 - static_cast<std::size_t>(hlen);
  if (body % sizeof(double) != 0) throw fail("truncated value block");
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, sizeof stored);
  if (crc32_of(bytes.subspan(8, bytes.size() - 12)) != stored) throw fail("checksum mismatch");

  Container c;
  c.header.assign(reinterpret_cast<const char*>(bytes.data() + 16), static_cast<std::size_t>(hlen));
  c.values.resize(body / sizeof(double));
  std::memcpy(c.values.data(), bytes.data() + 16 + hlen, body);
  return c;
}

inline void write_container(const std::filesystem::path& path, const std::string& magic,
                            const Container& c) {
  const auto bytes = encode_container(magic, c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Container read_container(const std::filesystem::path& path, const std::string& magic) {
  const auto bytes = read_bytes(path);
  return decode_container(magic, bytes, path.string());
}

/// Major.minor version check: same major is readable.
inline void check_format_version(const std::string& version, int supported_major,
                                 const std::string& name) {
  const auto dot = version.find('.');
  int major = -1;
  try {
    major = std::stoi(version.substr(0, dot));
  } catch (const std::exception&) {
    throw FormatError(name + ": unparseable format version '" + version + "'");
  }
  if (major != supported_major)
    throw FormatError(name + ": unsupported format version " + version + " (this build reads " +
                      std::to_string(supported_major) + ".x)");
}

}  // namespace drnnsep::io
