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

#include "buoy/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "buoy/errors.hpp"

namespace buoy {

std::vector<int> default_allan_sizes(std::size_t length) {
  static constexpr int kLadder[] = {1, 2, 3, 5, 8, 13, 22, 36, 60, 100, 200};
  std::vector<int> sizes;
  for (int n : kLadder) {
    if (length / std::size_t(n) >= 2) sizes.push_back(n);
  }
  return sizes;
}

AllanCurve allan_deviation(std::span<const double> series, std::span<const int> sizes) {
  if (series.size() < 2) throw Error(ErrorCode::TooFewGroups, "series needs at least two samples");
  if (!std::all_of(series.begin(), series.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::InvalidArgument, "series contains non-finite values");
  }
  std::vector<int> ns(sizes.begin(), sizes.end());
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  AllanCurve curve;
  for (int n : ns) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "ensemble size must be >= 1");
    const std::size_t groups = series.size() / std::size_t(n);
    if (groups < 2) {
      std::ostringstream msg;
      msg << "n = " << n << " leaves " << groups << " complete group(s) of " << series.size() << " samples";
      throw Error(ErrorCode::TooFewGroups, msg.str());
    }
    std::vector<double> means(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += series[g * n + k];
      means[g] = sum / n;
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= double(groups);
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    curve.entries.push_back({n, std::sqrt(ss / double(groups - 1)), static_cast<int>(groups)});
  }
  return curve;
}

NoiseFloor noise_floor(const AllanCurve& curve, double plateau_window) {
  const auto& e = curve.entries;
  if (e.size() < 5) throw Error(ErrorCode::TooFewEntries, "noise floor needs at least five curve entries");
  if (!(plateau_window > 0.0 && plateau_window <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "plateau window must be in (0, 1]");
  }
  const auto count = std::max<std::size_t>(1, std::size_t(std::ceil(plateau_window * double(e.size()))));
  NoiseFloor out;
  out.entries_used = static_cast<int>(count);
  for (std::size_t i = e.size() - count; i < e.size(); ++i) out.floor += e[i].sigma;
  out.floor /= double(count);
  if (count > 1) {
    double ss = 0.0;
    for (std::size_t i = e.size() - count; i < e.size(); ++i) ss += std::pow(e[i].sigma - out.floor, 2);
    out.spread = std::sqrt(ss / double(count - 1));
  }
  return out;
}

double log_log_slope(const AllanCurve& curve, int n_min, int n_max) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& e : curve.entries) {
    if (e.n >= n_min && e.n <= n_max && e.sigma > 0.0) pts.emplace_back(std::log(e.n), std::log(e.sigma));
  }
  if (pts.size() < 2) throw Error(ErrorCode::TooFewEntries, "need two positive entries in range");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= double(pts.size());
  my /= double(pts.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  return sxy / sxx;
}

double field_uncertainty(double delta_position_um, double gradient_g_per_mm) {
  return gradient_g_per_mm * delta_position_um * 1e-3;
}

}  // namespace buoy
