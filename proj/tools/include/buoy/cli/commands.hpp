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

// Sub-commands of the `buoy` tool. Each writes plain data files into an
// output directory and returns their paths.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "buoy/cli/config.hpp"

namespace buoy::cli {

using Paths = std::vector<std::filesystem::path>;

struct FieldLine {
  int axis = 0;  // 0 = x, 1 = y, 2 = z
  double from_mm = -0.05;
  double to_mm = 0.05;
  int samples = 101;
  Drive drive;  // empty means the quadrupole drive
};

/// field.csv: exact field along the line, the linear quadrupole model
/// B(0) + Q diag(1, 1, -2) r with Q read off the exact gradient at the
/// origin, and their difference.
Paths cmd_field(const ExperimentConfig& config, const FieldLine& line, const std::filesystem::path& out);

/// zero.json: analytic and Newton trap zero under the configured stray field.
Paths cmd_zero(const ExperimentConfig& config, const std::filesystem::path& out);

/// shots.csv and clusters.json. One progress line per condition goes to
/// `progress`.
Paths cmd_shots(const ExperimentConfig& config, unsigned workers, const std::filesystem::path& out,
                std::ostream& progress);

/// compensation.json and regression_{y,z}.csv from a shot-record CSV.
Paths cmd_compensate(const ExperimentConfig& config, const std::filesystem::path& records,
                     const std::filesystem::path& out);

/// allan_{y,z}.csv and noise_floor.json from a shot-record CSV, or
/// allan.csv from a one-column series. From shot records the series is the
/// QC-passing centers, in shot order, of the `condition`-th (bias, polarity)
/// condition in order of first appearance. Empty `sizes` selects the
/// default ladder.
Paths cmd_allan(const ExperimentConfig& config, const std::filesystem::path& records, std::vector<int> sizes,
                std::size_t condition, const std::filesystem::path& out);

struct SensitivitySweep {
  double from_A = -3e-4;
  double to_A = 3e-4;
  int steps = 13;
};

/// sensitivity.csv: axial zero shift against common-mode current change.
Paths cmd_sensitivity(const ExperimentConfig& config, const SensitivitySweep& sweep, const std::filesystem::path& out);

/// Full command line: parses `argv`, runs the sub-command, reports errors
/// as JSON on `err`. Returns 0 on success, 1 for invalid input, 2 for
/// numerical failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace buoy::cli
