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

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"

#include "buoy/errors.hpp"
#include "buoy/stats.hpp"
#include "test_support.hpp"

namespace buoy {
namespace {

std::vector<double> white_noise(std::uint64_t seed, std::size_t n, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

double sample_std(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / double(v.size() - 1));
}

TEST_CASE("default size ladder") {
  CHECK(default_allan_sizes(10000) == std::vector<int>{1, 2, 3, 5, 8, 13, 22, 36, 60, 100, 200});
  CHECK(default_allan_sizes(100) == std::vector<int>{1, 2, 3, 5, 8, 13, 22, 36});
  CHECK(default_allan_sizes(1).empty());
}

TEST_CASE("allan deviation of a constant series is zero") {
  const std::vector<double> series(500, 3.25);
  const auto sizes = default_allan_sizes(series.size());
  for (const auto& e : allan_deviation(series, sizes).entries) CHECK(e.sigma == 0.0);
}

TEST_CASE("n = 1 is the sample standard deviation") {
  const auto series = white_noise(5, 1001);
  const std::vector<int> sizes{1};
  const AllanEntry e = allan_deviation(series, sizes).entries.at(0);
  CHECK(e.sigma == doctest::Approx(sample_std(series)).epsilon(1e-12));
  CHECK(e.n_groups == 1001);
}

TEST_CASE("group partition drops the tail") {
  const std::vector<double> series{1, 2, 3, 4, 5, 6, 7};
  const std::vector<int> sizes{3, 2, 3};
  const AllanCurve c = allan_deviation(series, sizes);
  REQUIRE(c.entries.size() == 2u);
  CHECK(c.entries[0].n == 2);
  CHECK(c.entries[0].n_groups == 3);
  CHECK(c.entries[0].sigma == doctest::Approx(2.0));  // means 1.5, 3.5, 5.5
  CHECK(c.entries[1].n_groups == 2);
  CHECK(c.entries[1].sigma == doctest::Approx(3.0 / std::sqrt(2.0)));  // means 2, 5
}

TEST_CASE("white noise follows n^-1/2") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto series = white_noise(seed, 10000, 0.3);
    const auto sizes = default_allan_sizes(series.size());
    const double slope = log_log_slope(allan_deviation(series, sizes), 1, 100);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.1));
  }
}

TEST_CASE("scale equivariance and shift invariance") {
  const auto series = white_noise(9, 3000);
  const auto sizes = default_allan_sizes(series.size());
  const AllanCurve base = allan_deviation(series, sizes);
  std::vector<double> scaled(series), shifted(series);
  for (auto& v : scaled) v *= -2.5;
  for (auto& v : shifted) v += 100.0;
  const AllanCurve s = allan_deviation(scaled, sizes);
  const AllanCurve t = allan_deviation(shifted, sizes);
  for (std::size_t i = 0; i < base.entries.size(); ++i) {
    CHECK(std::abs(s.entries[i].sigma - 2.5 * base.entries[i].sigma) <= 1e-12 * 2.5 * base.entries[i].sigma);
    CHECK(std::abs(t.entries[i].sigma - base.entries[i].sigma) <= 1e-12 * base.entries[i].sigma);
  }
}

TEST_CASE("allan errors") {
  const std::vector<double> series(10, 1.0);
  const std::vector<int> too_big{6};
  CHECK(testing::error_code_of([&] { allan_deviation(series, too_big); }) == ErrorCode::TooFewGroups);
  const std::vector<int> zero{0};
  CHECK(testing::error_code_of([&] { allan_deviation(series, zero); }) == ErrorCode::InvalidArgument);
  std::vector<double> bad(series);
  bad[3] = std::nan("");
  const std::vector<int> one{1};
  CHECK(testing::error_code_of([&] { allan_deviation(bad, one); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("noise floor") {
  SUBCASE("sinusoid raises the floor above the white-noise extrapolation") {
    auto series = white_noise(11, 20000, 0.2);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] += 0.05 * std::sin(2.0 * testing::kPi * double(i) / 2000.0);
    const auto sizes = default_allan_sizes(series.size());
    const AllanCurve c = allan_deviation(series, sizes);
    const NoiseFloor f = noise_floor(c);
    const double white = c.entries.front().sigma / std::sqrt(double(c.entries.back().n));
    CHECK(f.floor > 2.0 * white);
    CHECK(f.entries_used == 3);
  }
  SUBCASE("pure white noise tracks the last entry") {
    const auto series = white_noise(12, 10000, 0.2);
    const auto sizes = default_allan_sizes(series.size());
    const AllanCurve c = allan_deviation(series, sizes);
    const NoiseFloor f = noise_floor(c);
    CHECK(std::abs(f.floor - c.entries.back().sigma) <= 2.0 * f.spread);
  }
  SUBCASE("y floor twice the z floor") {
    const auto y = white_noise(13, 10000, 0.4);
    const auto z = white_noise(14, 10000, 0.2);
    const auto sizes = default_allan_sizes(y.size());
    const double fy = noise_floor(allan_deviation(y, sizes), 1.0).floor;
    const double fz = noise_floor(allan_deviation(z, sizes), 1.0).floor;
    CHECK(fy / fz == doctest::Approx(2.0).epsilon(0.15));
  }
  SUBCASE("errors") {
    AllanCurve c;
    c.entries.resize(4, AllanEntry{1, 1.0, 2});
    CHECK(testing::error_code_of([&] { noise_floor(c); }) == ErrorCode::TooFewEntries);
    c.entries.resize(5, AllanEntry{1, 1.0, 2});
    CHECK(testing::error_code_of([&] { noise_floor(c, 0.0); }) == ErrorCode::InvalidArgument);
    CHECK(noise_floor(c, 0.01).entries_used == 1);
    CHECK(noise_floor(c, 0.01).spread == 0.0);
  }
}

TEST_CASE("field uncertainty") {
  CHECK(field_uncertainty(2.0, 2.5) == doctest::Approx(0.005));
  CHECK(field_uncertainty(0.0, 2.5) == 0.0);
  const double px = 5.0;
  CHECK(field_uncertainty(0.4 * px, 2.5) == doctest::Approx(field_uncertainty(0.2 * px, 5.0)));
}

}  // namespace
}  // namespace buoy
