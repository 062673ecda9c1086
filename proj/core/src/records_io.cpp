// Copyright 2026 The Buoy Authors. All rights reserved.
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

#include "buoy/records_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "buoy/errors.hpp"
#include "buoy/format.hpp"

namespace buoy {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  return s.substr(start);
}

bool parse_double(const std::string& text, double& out) {
  const auto t = trim(text);
  if (t.empty()) return false;
  const auto result = std::from_chars(t.data(), t.data() + t.size(), out);
  return result.ec == std::errc() && result.ptr == t.data() + t.size();
}

double require_double(const std::string& text, std::size_t line) {
  double v = 0.0;
  if (!parse_double(text, v)) {
    throw Error(ErrorCode::IoError, "line " + std::to_string(line) + ": expected a number, got '" + text + "'");
  }
  return v;
}

}  // namespace

void write_shot_csv(std::ostream& out, const std::vector<ShotRecord>& records) {
  out << kShotCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.shot_id << ',' << format_number(r.bias.ix) << ',' << format_number(r.bias.iy) << ','
        << format_number(r.bias.iz) << ',' << r.polarity << ',';
    if (r.fitted_center) {
      out << format_number(r.fitted_center->x()) << ',' << format_number(r.fitted_center->y());
    } else {
      out << ',';
    }
    out << ',' << (r.qc_passed ? 1 : 0) << ',' << r.seed << "\n";
  }
}

bool looks_like_shot_csv(std::istream& in) {
  const auto pos = in.tellg();
  std::string line;
  std::getline(in, line);
  in.clear();
  in.seekg(pos);
  return trim(line) == kShotCsvHeader;
}

std::vector<ShotRecord> read_shot_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kShotCsvHeader) {
    throw Error(ErrorCode::IoError, std::string("shot CSV must start with '") + kShotCsvHeader + "'");
  }
  std::vector<ShotRecord> records;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line));
    if (f.size() != 9) throw Error(ErrorCode::IoError, "line " + std::to_string(number) + ": expected 9 fields");
    ShotRecord r;
    r.shot_id = static_cast<std::int64_t>(require_double(f[0], number));
    r.bias = {require_double(f[1], number), require_double(f[2], number), require_double(f[3], number)};
    r.polarity = static_cast<int>(require_double(f[4], number));
    if (r.polarity != 1 && r.polarity != -1) {
      throw Error(ErrorCode::IoError, "line " + std::to_string(number) + ": polarity must be 1 or -1");
    }
    double y = 0.0, z = 0.0;
    if (parse_double(f[5], y) && parse_double(f[6], z)) r.fitted_center = Vec2(y, z);
    r.qc_passed = require_double(f[7], number) != 0.0;
    r.seed = static_cast<std::uint64_t>(std::stoull(trim(f[8])));
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<double> read_series_csv(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto first = split(t).front();
    double v = 0.0;
    if (parse_double(first, v)) {
      values.push_back(v);
    } else if (number != 1) {
      throw Error(ErrorCode::IoError, "line " + std::to_string(number) + ": expected a number");
    }
  }
  return values;
}

void write_allan_csv(std::ostream& out, const AllanCurve& curve) {
  out << "n,sigma_px,n_groups,white_noise_px\n";
  const AllanEntry* unit = nullptr;
  for (const auto& e : curve.entries) {
    if (e.n == 1) unit = &e;
  }
  for (const auto& e : curve.entries) {
    out << e.n << ',' << format_number(e.sigma) << ',' << e.n_groups << ',';
    if (unit) out << format_number(unit->sigma / std::sqrt(double(e.n)));
    out << "\n";
  }
}

}  // namespace buoy
