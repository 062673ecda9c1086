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

// Differential polarity-reversal protocol: shots, cluster statistics,
// midpoints, and compensation-current regression.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "buoy/imaging.hpp"
#include "buoy/magnetostatics.hpp"

namespace buoy {

struct BiasSetting {
  double ix = 0.0;
  double iy = 0.0;
  double iz = 0.0;

  Vec3 as_vector() const { return {ix, iy, iz}; }
  void validate(double supply_limit) const;
  friend bool operator==(const BiasSetting&, const BiasSetting&) = default;
};

/// Bias field per ampere at the trap center. `field_per_amp.col(i)` is the
/// full field vector of bias pair i; alpha_i is its i-th component.
struct AlphaCoefficients {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  Mat3 field_per_amp = Mat3::Zero();
  std::vector<std::string> warnings;

  Vec3 diagonal() const { return {x, y, z}; }
  /// Bias field produced by the given currents, cross terms included.
  Vec3 bias_field(const BiasSetting& bias) const { return field_per_amp * bias.as_vector(); }
};

struct BiasCoilNames {
  std::string x = reference_names::kCompX;
  std::string y = reference_names::kCompY;
  std::string z = reference_names::kMotPlus;
};

/// Throws UnknownCoil if the assembly lacks any of the three bias currents.
AlphaCoefficients compute_alpha(const CoilAssembly& assembly, const BiasCoilNames& names = {},
                                const Vec3& center = Vec3::Zero());

enum class ShotMode { Fast, Full };

const char* to_string(ShotMode mode) noexcept;
ShotMode shot_mode_from_string(const std::string& text);

struct ShotNoise {
  /// Fast mode: RMS of the seeded center jitter per image axis, micrometers.
  Vec2 center_rms_um = Vec2(2.0, 2.0);
  /// Full mode: camera and OD noise.
  double photon_noise_scale = 1.0;
  double offset_drift = 0.02;
  CameraModel camera;
};

/// Everything a shot needs besides its bias setting, polarity and seed.
struct ShotConfig {
  AlphaCoefficients alpha;
  double quadrupole_strength = kTargetQuadrupoleGradient;  // |Q| in G/mm
  Vec3 stray_field = Vec3::Zero();
  Mat3 stray_gradient = Mat3::Zero();
  ImagingGeometry geometry;
  /// Image position of the trap zero at zero external field; NaN means
  /// the frame center.
  Vec2 principal_point = Vec2::Constant(NAN);
  /// Rotation of the image axes relative to the lab transverse axes.
  double misalignment_rad = 0.0;
  ShotMode mode = ShotMode::Fast;
  ShotNoise noise;
  double temperature_uK = 10.0;
  double peak_od = 1.0;
  bool include_gravity = true;
  /// Optional loading model: peak OD is divided by (1 + coefficient * |B_ext| / 1 G).
  double od_field_coupling = 0.0;
  QcThresholds qc;
  double supply_limit = 5.0;

  Vec2 principal() const;
  /// External field state seen by the atoms for a bias setting.
  ExternalField external_field(const BiasSetting& bias) const;
};

struct ShotRecord {
  std::int64_t shot_id = 0;
  BiasSetting bias;
  int polarity = 1;
  std::optional<Vec2> fitted_center;  // (y, z) px
  bool qc_passed = false;
  std::uint64_t seed = 0;
  ShotMode mode = ShotMode::Fast;
  std::vector<QcFailure> qc_reasons;
  std::string failure;  // exception text when the fit itself failed
};

/// One simulated shot. Fast mode places the cloud at the displaced zero
/// plus seeded jitter; full mode renders, noises, and fits an OD image.
/// QC failures are recorded, not thrown. Throws UntrappedCloud.
ShotRecord run_shot(const ShotConfig& config, const BiasSetting& bias, int polarity,
                    std::uint64_t seed, std::int64_t shot_id = 0);

/// Noise-free image-plane position (px) of the trap zero.
Vec2 ideal_position(const ShotConfig& config, const BiasSetting& bias, int polarity);

enum class PolaritySchedule { Alternating, Blocked };

struct CampaignPlan {
  std::vector<BiasSetting> grid;
  int shots_per_condition = 50;  // per polarity
  std::uint64_t base_seed = 1;
  PolaritySchedule schedule = PolaritySchedule::Alternating;
};

/// Shot ids run from 0 in (bias, shot) order; shot i uses seed base_seed + i.
/// Output is ordered by shot id regardless of `workers`.
std::vector<ShotRecord> run_campaign(const ShotConfig& config, const CampaignPlan& plan,
                                     unsigned workers = 1);

/// Cartesian product of per-axis current lists.
std::vector<BiasSetting> bias_grid(const std::vector<double>& ix, const std::vector<double>& iy,
                                   const std::vector<double>& iz);

enum class Estimator { Mean, SigmaClipped };

const char* to_string(Estimator estimator) noexcept;
Estimator estimator_from_string(const std::string& text);

struct ClusterSummary {
  BiasSetting bias;
  int polarity = 1;
  Vec2 mean_center = Vec2::Zero();
  std::optional<Vec2> center_stderr;  // absent for a single shot
  int n_shots = 0;
  Estimator estimator = Estimator::Mean;
};

/// Uses QC-passing records only. Throws EmptyCluster or MixedCondition.
ClusterSummary summarize_cluster(const std::vector<ShotRecord>& records,
                                 Estimator estimator = Estimator::Mean);

/// Splits a campaign into (bias, polarity) clusters in first-seen order.
std::vector<std::vector<ShotRecord>> group_by_condition(const std::vector<ShotRecord>& records);

struct RhombusPoint {
  BiasSetting bias;
  Vec2 midpoint = Vec2::Zero();
  Vec2 displacement = Vec2::Zero();  // positive minus negative polarity
  std::optional<Vec2> midpoint_stderr;
  std::optional<Vec2> displacement_stderr;
};

/// Throws MixedCondition unless the clusters share a bias and have
/// polarities +1 and -1 respectively.
RhombusPoint rhombus(const ClusterSummary& positive, const ClusterSummary& negative);

/// Pairs the polarity clusters of each bias setting of a campaign.
std::vector<RhombusPoint> rhombus_points(const std::vector<ClusterSummary>& clusters);

enum class Axis { Y, Z };

struct AxisRegression {
  Axis axis = Axis::Y;
  double current_at = 0.0;  // A
  double slope = 0.0;       // px/A
  double intercept = 0.0;   // px
  std::optional<double> crossing_stderr;
  int n_points = 0;
};

/// OLS fit of displacement against the axis current and its zero crossing.
/// The crossing stderr propagates the points' displacement stderrs when all
/// points carry one, else it comes from the fit residuals (needs n > 2).
/// Throws DegenerateDesign or ZeroSlope.
AxisRegression compensation_regression(const std::vector<RhombusPoint>& points, Axis axis);

struct CompensationResult {
  std::optional<AxisRegression> y;
  std::optional<AxisRegression> z;
};

/// B_stray,i = -alpha_i * I_i@ in Gauss, for the axes present in `result`.
/// Throws ZeroAlpha.
struct StrayEstimate {
  std::optional<double> y;
  std::optional<double> z;
};
StrayEstimate infer_stray_field(const CompensationResult& result, const AlphaCoefficients& alpha);

}  // namespace buoy
