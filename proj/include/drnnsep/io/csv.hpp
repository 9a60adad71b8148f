// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <stdexcept>
#include <vector>

#include "drnnsep/common.hpp"

namespace drnnsep::io {

/// Quotes a field when it contains a comma, quote, CR or LF (RFC 4180).
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Shortest decimal that round-trips the double; fixed across runs.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// In-memory table; written with "\n" line endings.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  void add_row(std::vector<std::string> row) {
    if (row.size() != header_.size())
      throw FormatError(detail::concat("csv: row has ", row.size(), " fields, header has ", header_.size()));
    rows_.push_back(std::move(row));
  }

  /// Index of a header column; throws FormatError when absent.
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw FormatError("csv: missing column '" + name + "'");
  }

  const std::string& at(std::size_t row, const std::string& name) const { return rows_.at(row).at(column(name)); }

  std::string str() const {
    std::string out;
    const auto line = [&out](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    f << str();
    if (!f) throw InputError("write failed: " + path.string());
  }

  /// Parses RFC 4180 text; the first record is the header.
  static CsvTable parse(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field += c;
        }
        continue;
      }
      if (c == '"' && !field_started) {
        quoted = field_started = true;
      } else if (c == ',') {
        rec.push_back(std::move(field));
        field.clear();
        field_started = false;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
        rec.push_back(std::move(field));
        field.clear();
        field_started = false;
        records.push_back(std::move(rec));
        rec.clear();
      } else {
        field += c;
        field_started = true;
      }
    }
    if (quoted) throw FormatError("csv: unterminated quoted field");
    if (field_started || !rec.empty()) {
      rec.push_back(std::move(field));
      records.push_back(std::move(rec));
    }
    if (records.empty()) throw FormatError("csv: empty input");
    CsvTable t(std::move(records.front()));
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].size() == 1 && records[i][0].empty()) continue;  // blank line
      t.add_row(std::move(records[i]));
    }
    return t;
  }

  static CsvTable read(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
      return parse(ss.str());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(what + ": not a number: '" + s + "'");
  }
}

}  // namespace drnnsep::io
