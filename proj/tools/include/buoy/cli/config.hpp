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

// Experiment configuration files for the command-line tool.
//
// A configuration is one JSON object; every key is optional:
//
//   {
//     "assembly": "reference" | "<path to coil JSON>" | {coil JSON},
//     "bias_coils": {"x": "comp_x", "y": "comp_y", "z": "motplus"},
//     "quadrupole": {"current_A": 4.7, "strength_G_per_mm": 2.5,
//                    "schedule": "alternating" | "blocked",
//                    "common_mode_asymmetry": 0.5},
//     "stray_field": {"homogeneous_G": [x, y, z],
//                     "gradient_G_per_mm": [[..], [..], [..]]},
//     "bias_grid": {"ix": [..], "iy": [..], "iz": [..]},
//     "shots_per_condition": 50,
//     "mode": "fast" | "full",
//     "estimator": "mean" | "sigma_clipped",
//     "noise": {"center_rms_um": [y, z], "photon_noise_scale": 1,
//               "offset_drift": 0.02, "reference_counts": 4000,
//               "dark_counts": 100},
//     "imaging": {"pixel_size_um": 5.3, "width": 200, "height": 200,
//                 "axis": "x", "magnification": 1,
//                 "misalignment_rad": 0, "principal_point_px": [u, v]},
//     "cloud": {"temperature_uK": 10, "peak_od": 1, "gravity": true,
//               "od_field_coupling": 0},
//     "qc": {"max_center_uncertainty_px": 0.1, "max_abs_skewness": 1,
//            "min_snr": 10},
//     "supply_limit_A": 5,
//     "base_seed": 1
//   }
//
// Unknown keys are rejected. Without "strength_G_per_mm" the quadrupole
// strength is the transverse gradient of the assembly at the given current.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "buoy/magnetostatics.hpp"
#include "buoy/protocol.hpp"

namespace buoy::cli {

struct ExperimentConfig {
  CoilAssembly assembly = reference_assembly();
  BiasCoilNames bias_coils;
  std::string quadrupole_pair = reference_names::kMot;
  double quadrupole_current = kNominalMotCurrent;
  std::optional<double> quadrupole_strength;
  PolaritySchedule schedule = PolaritySchedule::Alternating;
  double common_mode_asymmetry = kDefaultCommonModeAsymmetry;
  ExternalField stray;
  std::vector<double> ix{0.0};
  std::vector<double> iy{0.0};
  std::vector<double> iz{0.0};
  int shots_per_condition = 50;
  ShotMode mode = ShotMode::Fast;
  Estimator estimator = Estimator::Mean;
  ShotNoise noise;
  ImagingGeometry imaging;
  double misalignment_rad = 0.0;
  std::optional<Vec2> principal_point;
  double temperature_uK = 10.0;
  double peak_od = 1.0;
  bool gravity = true;
  double od_field_coupling = 0.0;
  QcThresholds qc;
  double supply_limit = 5.0;
  std::uint64_t base_seed = 1;
};

/// Parses a configuration document. Relative assembly paths resolve
/// against `base_dir`. Throws Error(ConfigError) with the offending key.
ExperimentConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});

/// Throws Error(IoError) if the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Drive of the quadrupole pair alone at the configured current.
Drive quadrupole_drive(const ExperimentConfig& config);

/// Configured strength, or the transverse gradient dBx/dx of the assembly at
/// the origin under the quadrupole drive.
double quadrupole_strength(const ExperimentConfig& config);

ShotConfig shot_config(const ExperimentConfig& config);
CampaignPlan campaign_plan(const ExperimentConfig& config);

}  // namespace buoy::cli
