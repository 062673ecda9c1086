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

// Absorption imaging: synthetic clouds, camera frames, optical density,
// 2D Gaussian fitting and the per-image quality gate.
//
// Image coordinates: the horizontal pixel coordinate (column) runs along the
// first lab axis transverse to the imaging axis, the vertical coordinate
// (row) along the second, both increasing with the lab coordinate. For the
// default imaging axis x these are (y, z). Pixel centers sit at integer
// coordinates.

#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "buoy/trap_model.hpp"

namespace buoy {

using Vec2 = Eigen::Vector2d;

struct ImagingGeometry {
  double pixel_size_um = 5.3;
  int width = 200;
  int height = 200;
  int imaging_axis = 0;  // 0 = x, 1 = y, 2 = z
  double magnification = 1.0;

  /// Size of one pixel in the object plane, mm.
  double object_pixel_mm() const { return pixel_size_um * 1e-3 / magnification; }
  /// Lab axes spanned by (column, row).
  std::pair<int, int> image_axes() const;
  /// Frame center in pixel coordinates.
  Vec2 center() const { return {width / 2.0, height / 2.0}; }
  void validate() const;
};

template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;  // row-major

  Raster() = default;
  Raster(int w, int h, T fill = T{}) : width(w), height(h), data(std::size_t(w) * h, fill) {}

  T& at(int col, int row) { return data[std::size_t(row) * width + col]; }
  const T& at(int col, int row) const { return data[std::size_t(row) * width + col]; }
  bool same_shape(int w, int h) const { return width == w && height == h; }
};

struct FrameTriplet {
  Raster<std::uint16_t> atom;
  Raster<std::uint16_t> reference;
  Raster<std::uint16_t> dark;
};

struct ODImage {
  Raster<float> od;
  ImagingGeometry geometry;
  /// 1 where the pixel was clamped during OD reconstruction; empty if none.
  std::vector<std::uint8_t> clamped;
  std::size_t clamped_count = 0;

  bool usable(std::size_t index) const { return clamped.empty() || clamped[index] == 0; }
};

struct GaussianFit {
  Vec2 center = Vec2::Zero();  // px
  Vec2 widths = Vec2::Zero();  // px
  double amplitude = 0.0;
  double offset = 0.0;
  Vec2 center_uncertainty = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 residual_skewness = Vec2::Zero();
  double snr = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct CloudModel {
  AtomSpecies species;
  double temperature_uK = 10.0;
  double peak_od = 1.0;
  FieldState field_state{QuadrupoleParams{2.5}, {}};
  bool include_gravity = true;
};

/// Column density of the thermal cloud exp(-U/kT) integrated along the
/// imaging axis, scaled so its maximum equals `peak_od`. The trap zero sits
/// at the frame center plus `true_center_offset` (px).
/// Throws UntrappedCloud if gravity overwhelms the axial gradient.
ODImage synthesize_od(const CloudModel& model, const ImagingGeometry& geometry,
                      const Vec2& true_center_offset = Vec2::Zero());

struct CameraModel {
  double reference_counts = 4000.0;
  double dark_counts = 100.0;
};

/// Builds atom/reference/dark frames reproducing `image` plus a constant OD
/// offset and Gaussian photon noise of standard deviation
/// photon_noise_scale * sqrt(counts). Deterministic in `seed`.
FrameTriplet apply_noise(const ODImage& image, double photon_noise_scale, double offset_drift,
                         std::uint64_t seed, const CameraModel& camera = {});

/// OD = -ln((atom - dark) / (reference - dark)). Numerator and denominator
/// are floored at one count; such pixels are flagged. Throws
/// DegenerateFrames if more than half the pixels needed clamping.
ODImage compute_od(const FrameTriplet& frames, const ImagingGeometry& geometry = {});

struct FitOptions {
  int max_iterations = 200;
};

/// Least-squares fit of A exp(-(u-u0)^2/2su^2 - (v-v0)^2/2sv^2) + C with
/// Levenberg-Marquardt damping, initialized from the half-maximum region. Clamped
/// pixels are excluded. Throws FitDegenerate or NoConvergence.
GaussianFit fit_gaussian(const ODImage& image, const FitOptions& options = {});

/// Third standardized moment of the two offset-subtracted marginals, taken
/// over a window of +-4 widths around `center` (clipped to the frame).
Vec2 marginal_skewness(const ODImage& image, double offset, const Vec2& center, const Vec2& widths);

enum class QcFailure { NotConverged, CenterUncertainty, Skewness, Snr };

const char* to_string(QcFailure failure) noexcept;

struct QcThresholds {
  double max_center_uncertainty_px = 0.1;
  double max_abs_skewness = 1.0;
  double min_snr = 10.0;
};

struct QcVerdict {
  bool passed = false;
  std::vector<QcFailure> reasons;
};

QcVerdict quality_gate(const GaussianFit& fit, const QcThresholds& thresholds = {});

/// Per-pixel OD noise at zero OD for a given photon noise scale.
double background_od_noise(double photon_noise_scale, const CameraModel& camera = {});

/// Photon noise scale that makes peak_od / background OD noise equal `snr`.
double photon_scale_for_snr(double peak_od, double snr, const CameraModel& camera = {});

}  // namespace buoy
