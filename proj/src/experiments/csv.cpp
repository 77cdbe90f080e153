// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "radloc/binary_io.hpp"
#include "radloc/experiments.hpp"

namespace radloc::experiments {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void CsvTable::add(std::vector<Cell> row) {
  require(row.size() == header.size(), "CSV row width does not match header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      if (const auto* d = std::get_if<double>(&r[i])) {
        out += format_real(*d);
      } else if (const auto* n = std::get_if<std::int64_t>(&r[i])) {
        out += std::to_string(*n);
      } else {
        out += std::get<std::string>(r[i]);
      }
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::string& path) const {
  const std::string s = str();
  io::write_file(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  fail(ErrorCode::kInvalidArgument, "no CSV column " + name);
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows.at(row).at(column(name));
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* n = std::get_if<std::int64_t>(&c)) return static_cast<double>(*n);
  fail(ErrorCode::kInvalidArgument, "CSV column " + name + " is not numeric");
}

const CsvTable& ExperimentOutput::table(const std::string& name) const {
  for (const auto& [n, t] : tables) {
    if (n == name) return t;
  }
  fail(ErrorCode::kInvalidArgument, "no output table " + name);
}

void ExperimentOutput::write(const std::string& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory " + dir + ": " + ec.message());
  for (const auto& [name, t] : tables) t.write((std::filesystem::path(dir) / name).string());
  for (const auto& [name, bytes] : checkpoints) {
    io::write_file((std::filesystem::path(dir) / name).string(), bytes);
  }
}

}  // namespace radloc::experiments
