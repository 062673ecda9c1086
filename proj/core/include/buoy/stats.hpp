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

// Non-overlapping Allan deviation of shot-to-shot positions and the
// conversion of position noise into field noise.

#pragma once

#include <span>
#include <vector>

namespace buoy {

struct AllanEntry {
  int n = 0;            // ensemble size
  double sigma = 0.0;   // px
  int n_groups = 0;
};

struct AllanCurve {
  std::vector<AllanEntry> entries;
};

/// {1, 2, 3, 5, 8, 13, 22, 36, 60, 100, 200} restricted to sizes that give
/// at least two complete groups for a series of `length` samples.
std::vector<int> default_allan_sizes(std::size_t length);

/// For each n: split the series in order into floor(len/n) disjoint groups
/// (tail dropped), average each, and take the sample standard deviation of
/// the averages. Sizes are sorted and deduplicated. Throws TooFewGroups if
/// any n leaves fewer than two groups, InvalidArgument on non-finite input.
AllanCurve allan_deviation(std::span<const double> series, std::span<const int> sizes);

struct NoiseFloor {
  double floor = 0.0;   // px
  double spread = 0.0;  // sample std of the plateau entries (0 for one entry)
  int entries_used = 0;
};

/// Mean sigma over the largest-n `plateau_window` fraction of the curve.
/// Throws TooFewEntries for curves with fewer than five entries.
NoiseFloor noise_floor(const AllanCurve& curve, double plateau_window = 0.25);

/// Least-squares slope of log(sigma) against log(n) for n in [n_min, n_max].
double log_log_slope(const AllanCurve& curve, int n_min, int n_max);

/// dB = gradient * dy. Micrometers and G/mm in, Gauss out.
double field_uncertainty(double delta_position_um, double gradient_g_per_mm);

}  // namespace buoy
