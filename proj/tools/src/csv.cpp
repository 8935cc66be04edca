// Copyright 2026 The squarm Authors. All Rights Reserved.
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
// =============================================================================

#include "squarm/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "squarm/error.hpp"

namespace squarm::cli {
namespace {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  return fmt::format("{:.17g}", x);
}

double parse_double(const std::string& field, const std::string& where) {
  if (field == "nan") return std::nan("");
  char* end = nullptr;
  const double x = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0') {
    throw Error(ErrorKind::kData, where + ": bad number '" + field + "'");
  }
  return x;
}

template <typename I>
I parse_int(const std::string& field, const std::string& where) {
  I value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::kData, where + ": bad integer '" + field + "'");
  }
  return value;
}

}  // namespace

std::string format_row(const MetricsRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", r.t, fmt_double(r.loss),
                     fmt_double(r.grad_norm_sq), fmt_double(r.consensus), r.bits_cum,
                     r.messages, r.triggers, fmt_double(r.virtual_residual),
                     fmt_double(r.weighted_avg_loss));
}

void write_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
}

void write_metrics_file(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + path + "'");
  write_metrics(out, rows);
}

std::vector<MetricsRow> read_metrics_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kData, "cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw Error(ErrorKind::kData, path + ": unexpected header");
  }
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw Error(ErrorKind::kData, where + ": expected 9 fields");
    MetricsRow r;
    r.t = parse_int<std::int64_t>(f[0], where);
    r.loss = parse_double(f[1], where);
    r.grad_norm_sq = parse_double(f[2], where);
    r.consensus = parse_double(f[3], where);
    r.bits_cum = parse_int<std::uint64_t>(f[4], where);
    r.messages = parse_int<std::uint64_t>(f[5], where);
    r.triggers = parse_int<std::uint64_t>(f[6], where);
    r.virtual_residual = parse_double(f[7], where);
    r.weighted_avg_loss = parse_double(f[8], where);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace squarm::cli
