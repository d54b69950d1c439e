#pragma once

// CSV and JSON artifacts. Every file carries the resolved scenario config.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kerrlab/config.hpp"
#include "kerrlab/errors.hpp"

namespace kerrlab::io {

namespace fs = std::filesystem;

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string config_header(const ScenarioConfig& c) {
  std::string s;
  for (const auto& [k, v] : resolved_entries(c)) s += "# " + k + " = " + v + "\n";
  return s;
}

class CsvWriter {
 public:
  CsvWriter(const ScenarioConfig& c, const std::vector<std::string>& columns, const std::string& extra_header = "") {
    buf_ = config_header(c) + extra_header;
    for (std::size_t i = 0; i < columns.size(); ++i) buf_ += (i ? "," : "") + columns[i];
    buf_ += "\n";
    ncol_ = columns.size();
  }
  void row(const std::vector<double>& values) {
    if (values.size() != ncol_) fail(ErrorKind::Io, "CSV row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) buf_ += ',';
      buf_ += num(values[i]);
    }
    buf_ += '\n';
  }
  void save(const fs::path& path) const { write_text(path, buf_); }

 private:
  std::string buf_;
  std::size_t ncol_ = 0;
};

inline nlohmann::ordered_json config_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : resolved_entries(c)) j[k] = v;
  return j;
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> header;  // "# key = value" lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    fail(ErrorKind::Io, "missing CSV column '" + name + "'");
  }
  std::string header_value(const std::string& key) const {
    for (const auto& [k, v] : header)
      if (k == key) return v;
    fail(ErrorKind::Io, "missing header entry '" + key + "'");
  }
};

inline CsvTable read_csv(const fs::path& path) {
  CsvTable t;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos)
        t.header.emplace_back(detail::trim_ws(line.substr(1, eq - 1)), detail::trim_ws(line.substr(eq + 1)));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size()) fail(ErrorKind::Io, "ragged row in " + path.string());
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double x = std::strtod(c.c_str(), &end);  // strtod keeps subnormals, stod throws on them
      if (c.empty() || end != c.c_str() + c.size()) fail(ErrorKind::Io, "non-numeric cell '" + c + "' in " + path.string());
      row.push_back(x);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace kerrlab::io
