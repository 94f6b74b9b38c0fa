// Copyright 2026 The invlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal CSV: comma-separated, one header row, no quoting. Fields must not
// contain commas or newlines.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "invlab/core/error.hpp"

namespace invlab {

/// Shortest round-trippable decimal form; "nan" for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& origin) {
  if (s == "nan") return std::nan("");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCategory::format, origin + ": not a number: '" + s + "'");
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    fail(ErrorCategory::format, "CSV has no column '" + name + "'");
  }

  void add(std::vector<std::string> row) {
    require(row.size() == header.size(), ErrorCategory::validation, "CSV row width differs from header");
    for (const auto& f : row)
      require(f.find_first_of(",\n\r") == std::string::npos, ErrorCategory::validation,
              "CSV field contains a separator: " + f);
    rows.push_back(std::move(row));
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot open for writing: " + path.string());
  out << text;
  if (!out) fail(ErrorCategory::io, "write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_csv(const CsvTable& t, const std::filesystem::path& path) { write_text(path, t.str()); }

inline CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      require(fields.size() == t.header.size(), ErrorCategory::format,
              origin + ": row width " + std::to_string(fields.size()) + " != header width");
      t.rows.push_back(std::move(fields));
    }
  }
  require(!first, ErrorCategory::format, origin + ": empty CSV");
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path), path.string()); }

/// Pipe table with the CSV header as column titles.
inline std::string csv_to_markdown(const CsvTable& t) {
  std::string out = "|";
  for (const auto& h : t.header) out += " " + h + " |";
  out += "\n|";
  for (std::size_t i = 0; i < t.header.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& r : t.rows) {
    out += "|";
    for (const auto& f : r) out += " " + f + " |";
    out += "\n";
  }
  return out;
}

}  // namespace invlab
