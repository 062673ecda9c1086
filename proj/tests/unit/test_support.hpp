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

#pragma once

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

#include "buoy/errors.hpp"

namespace buoy::testing {

constexpr double kPi = 3.14159265358979323846;

// Largest absolute componentwise difference.
template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// On-axis field of a circular filament loop of radius r at axial distance u,
// for ampere-turns `at`. Units: mm, A, G (mu0 = 4 pi).
inline double loop_on_axis(double at, double r, double u) {
  return 2.0 * kPi * at * r * r / std::pow(r * r + u * u, 1.5);
}

// On-axis field of a uniform thick solenoid a < r < b whose ends sit at
// axial offsets u1 < u2 from the field point, current density j (A/mm^2).
inline double thick_solenoid_on_axis(double j, double a, double b, double u1, double u2) {
  auto g = [&](double u) {
    return u * std::log((b + std::hypot(b, u)) / (a + std::hypot(a, u)));
  };
  return 2.0 * kPi * j * (g(u2) - g(u1));
}

inline Eigen::Vector3d random_point(std::mt19937_64& rng, double half_width) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  return {u(rng), u(rng), u(rng)};
}

template <typename F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected buoy::Error");
}

}  // namespace buoy::testing
