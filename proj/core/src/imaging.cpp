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

#include "buoy/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "buoy/errors.hpp"

namespace buoy {
namespace {

constexpr int kHalfNodes = 64;           // Gauss-Legendre nodes per half line
constexpr double kQuadratureReach = 40.0;  // in thermal lengths
constexpr double kSkewWindow = 4.0;        // half-width in fitted sigmas

struct QuadratureRule {
  std::array<double, kHalfNodes> nodes{};
  std::array<double, kHalfNodes> weights{};
};

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
const QuadratureRule& gauss_legendre() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    constexpr int n = kHalfNodes;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      r.nodes[i] = x;
      r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

enum Param { kAmp = 0, kU0, kV0, kSu, kSv, kOff };

struct Sample {
  double u;
  double v;
  double value;
};

double sum_squares(const std::vector<Sample>& samples, const Vec6& p) {
  double ssr = 0.0;
  for (const auto& s : samples) {
    const double du = s.u - p[kU0];
    const double dv = s.v - p[kV0];
    const double g = std::exp(-0.5 * (du * du / (p[kSu] * p[kSu]) + dv * dv / (p[kSv] * p[kSv])));
    const double r = p[kAmp] * g + p[kOff] - s.value;
    ssr += r * r;
  }
  return ssr;
}

// Accumulates J^T J and J^T r; returns the sum of squared residuals.
double normal_equations(const std::vector<Sample>& samples, const Vec6& p, Mat6& jtj, Vec6& jtr) {
  jtj.setZero();
  jtr.setZero();
  double ssr = 0.0;
  const double su2 = p[kSu] * p[kSu];
  const double sv2 = p[kSv] * p[kSv];
  Vec6 row;
  for (const auto& s : samples) {
    const double du = s.u - p[kU0];
    const double dv = s.v - p[kV0];
    const double g = std::exp(-0.5 * (du * du / su2 + dv * dv / sv2));
    const double ag = p[kAmp] * g;
    const double r = ag + p[kOff] - s.value;
    row << g, ag * du / su2, ag * dv / sv2, ag * du * du / (su2 * p[kSu]), ag * dv * dv / (sv2 * p[kSv]), 1.0;
    jtj.selfadjointView<Eigen::Lower>().rankUpdate(row);
    jtr += r * row;
    ssr += r * r;
  }
  jtj = jtj.selfadjointView<Eigen::Lower>();
  return ssr;
}

// Box-smoothed value at a pixel, ignoring unusable neighbours.
double smoothed(const ODImage& image, int col, int row) {
  const auto& od = image.od;
  double sum = 0.0;
  int count = 0;
  for (int r = std::max(row - 1, 0); r <= std::min(row + 1, od.height - 1); ++r) {
    for (int c = std::max(col - 1, 0); c <= std::min(col + 1, od.width - 1); ++c) {
      if (!image.usable(std::size_t(r) * od.width + c)) continue;
      sum += od.at(c, r);
      ++count;
    }
  }
  return count > 0 ? sum / count : -INFINITY;
}

// Offset from the border median, amplitude from the smoothed peak, center and
// widths from the region above half maximum. For a Gaussian that region is an
// ellipse whose second moments are sigma^2 ln2 / 2.
Vec6 initial_guess(const ODImage& image) {
  const auto& od = image.od;
  std::vector<double> border;
  for (int col = 0; col < od.width; ++col) {
    for (int row = 0; row < od.height; ++row) {
      const bool edge = col < 2 || row < 2 || col >= od.width - 2 || row >= od.height - 2;
      if (edge && image.usable(std::size_t(row) * od.width + col)) border.push_back(od.at(col, row));
    }
  }
  if (border.empty()) throw Error(ErrorCode::FitDegenerate, "no usable border pixels");
  std::nth_element(border.begin(), border.begin() + border.size() / 2, border.end());
  const double offset = border[border.size() / 2];

  double peak = -INFINITY, lowest = INFINITY;
  for (int row = 0; row < od.height; ++row) {
    for (int col = 0; col < od.width; ++col) {
      const double v = smoothed(image, col, row);
      peak = std::max(peak, v);
      if (std::isfinite(v)) lowest = std::min(lowest, v);
    }
  }
  const double amplitude = peak - offset;
  // A bump must stand out against the image's own range (a dip does not).
  if (!(amplitude > 1e-9 * std::max(1.0, std::abs(peak))) || !(amplitude > 0.01 * (peak - lowest))) {
    throw Error(ErrorCode::FitDegenerate, "image has no signal above its offset");
  }

  const double half = offset + 0.5 * amplitude;
  double n = 0.0, mu = 0.0, mv = 0.0, uu = 0.0, vv = 0.0;
  for (int row = 0; row < od.height; ++row) {
    for (int col = 0; col < od.width; ++col) {
      const std::size_t i = std::size_t(row) * od.width + col;
      if (!image.usable(i) || od.data[i] < half) continue;
      n += 1.0;
      mu += col;
      mv += row;
      uu += double(col) * col;
      vv += double(row) * row;
    }
  }
  if (n == 0.0) throw Error(ErrorCode::FitDegenerate, "image has no signal above its offset");
  mu /= n;
  mv /= n;
  const double var_u = std::max(uu / n - mu * mu, 0.0) + 1.0 / 12.0;
  const double var_v = std::max(vv / n - mv * mv, 0.0) + 1.0 / 12.0;
  const double su = std::clamp(std::sqrt(2.0 * var_u / std::log(2.0)), 0.5, double(od.width));
  const double sv = std::clamp(std::sqrt(2.0 * var_v / std::log(2.0)), 0.5, double(od.height));
  Vec6 p;
  p << amplitude, mu, mv, su, sv, offset;
  return p;
}

}  // namespace

std::pair<int, int> ImagingGeometry::image_axes() const {
  switch (imaging_axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

void ImagingGeometry::validate() const {
  if (!(pixel_size_um > 0.0)) throw Error(ErrorCode::InvalidArgument, "pixel size must be positive");
  if (!(magnification > 0.0)) throw Error(ErrorCode::InvalidArgument, "magnification must be positive");
  if (width < 16 || height < 16) throw Error(ErrorCode::InvalidArgument, "frames must be at least 16x16");
  if (imaging_axis < 0 || imaging_axis > 2) throw Error(ErrorCode::InvalidArgument, "imaging axis must be 0, 1 or 2");
}

ODImage synthesize_od(const CloudModel& model, const ImagingGeometry& geometry,
                      const Vec2& true_center_offset) {
  geometry.validate();
  if (!(model.temperature_uK > 0.0) || !(model.peak_od > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "temperature and peak OD must be positive");
  }
  const auto& q = model.field_state.quadrupole;
  if (q.strength == 0.0) throw Error(ErrorCode::ZeroQuadrupole, "quadrupole strength is zero");
  if (model.include_gravity && !(downhill_restoring_force(model.species, q) > 0.0)) {
    throw Error(ErrorCode::UntrappedCloud, "gravity exceeds the axial magnetic restoring force");
  }

  const Vec3 zero = displaced_zero_inhomogeneous(q, model.field_state.external);
  const double kt = kBoltzmann * model.temperature_uK * 1e-6;
  const double mu = kBohrMagneton * model.species.g_factor_product * 1e-4;  // J per Gauss
  const double thermal_length = kt / (mu * std::abs(q.strength));        // mm
  const double gravity_per_mm = model.include_gravity ? model.species.mass * kStandardGravity * 1e-3 : 0.0;

  // The line of sight is split at the trap zero, where |B| has a kink, and
  // each half is mapped by x = L sinh(t) so nodes crowd near the zero.
  const double t_max = std::asinh(kQuadratureReach);
  const auto& rule = gauss_legendre();
  std::array<double, 2 * kHalfNodes> offsets{};
  std::array<double, 2 * kHalfNodes> weights{};
  for (int k = 0; k < kHalfNodes; ++k) {
    const double t = 0.5 * t_max * (rule.nodes[k] + 1.0);
    const double w = 0.5 * t_max * rule.weights[k] * thermal_length * std::cosh(t);
    offsets[2 * k] = thermal_length * std::sinh(t);
    offsets[2 * k + 1] = -offsets[2 * k];
    weights[2 * k] = weights[2 * k + 1] = w;
  }

  const auto [h_axis, v_axis] = geometry.image_axes();
  const int los = geometry.imaging_axis;
  const double pix = geometry.object_pixel_mm();
  const Vec2 origin = geometry.center() + true_center_offset;

  ODImage image;
  image.geometry = geometry;
  image.od = Raster<float>(geometry.width, geometry.height);
  std::vector<double> column(std::size_t(geometry.width) * geometry.height);
  double peak = 0.0;
  for (int row = 0; row < geometry.height; ++row) {
    for (int col = 0; col < geometry.width; ++col) {
      Vec3 r = zero;
      r[h_axis] += (col - origin.x()) * pix;
      r[v_axis] += (row - origin.y()) * pix;
      double sum = 0.0;
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        Vec3 p = r;
        p[los] = zero[los] + offsets[k];
        const double energy =
            mu * model.field_state.field_at(p).norm() + gravity_per_mm * (p.z() - zero.z());
        sum += weights[k] * std::exp(-energy / kt);
      }
      column[std::size_t(row) * geometry.width + col] = sum;
      peak = std::max(peak, sum);
    }
  }
  for (std::size_t i = 0; i < column.size(); ++i) {
    image.od.data[i] = static_cast<float>(model.peak_od * column[i] / peak);
  }
  return image;
}

FrameTriplet apply_noise(const ODImage& image, double photon_noise_scale, double offset_drift,
                         std::uint64_t seed, const CameraModel& camera) {
  if (photon_noise_scale < 0.0) throw Error(ErrorCode::InvalidArgument, "noise scale must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int w = image.od.width;
  const int h = image.od.height;
  FrameTriplet frames{Raster<std::uint16_t>(w, h), Raster<std::uint16_t>(w, h), Raster<std::uint16_t>(w, h)};

  auto quantize = [](double counts) {
    return static_cast<std::uint16_t>(std::clamp(std::nearbyint(counts), 0.0, 65535.0));
  };
  const double ref = camera.reference_counts;
  const double dark = camera.dark_counts;
  for (std::size_t i = 0; i < image.od.data.size(); ++i) {
    const double transmitted = ref * std::exp(-(double(image.od.data[i]) + offset_drift));
    const double n_ref = normal(rng);
    const double n_atom = normal(rng);
    const double n_dark = normal(rng);
    frames.reference.data[i] = quantize(dark + ref + photon_noise_scale * std::sqrt(ref + dark) * n_ref);
    frames.atom.data[i] = quantize(dark + transmitted + photon_noise_scale * std::sqrt(transmitted + dark) * n_atom);
    frames.dark.data[i] = quantize(dark + photon_noise_scale * std::sqrt(dark) * n_dark);
  }
  return frames;
}

ODImage compute_od(const FrameTriplet& frames, const ImagingGeometry& geometry) {
  const int w = frames.atom.width;
  const int h = frames.atom.height;
  if (!frames.reference.same_shape(w, h) || !frames.dark.same_shape(w, h)) {
    throw Error(ErrorCode::InvalidArgument, "frame dimensions differ");
  }
  ODImage image;
  image.geometry = geometry;
  image.geometry.width = w;
  image.geometry.height = h;
  image.od = Raster<float>(w, h);
  std::vector<std::uint8_t> flags(std::size_t(w) * h, 0);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    double numerator = double(frames.atom.data[i]) - frames.dark.data[i];
    double denominator = double(frames.reference.data[i]) - frames.dark.data[i];
    if (numerator < 1.0 || denominator < 1.0) {
      numerator = std::max(numerator, 1.0);
      denominator = std::max(denominator, 1.0);
      flags[i] = 1;
      ++clamped;
    }
    image.od.data[i] = static_cast<float>(-std::log(numerator / denominator));
  }
  if (2 * clamped > flags.size()) {
    std::ostringstream msg;
    msg << clamped << " of " << flags.size() << " pixels needed clamping";
    throw Error(ErrorCode::DegenerateFrames, msg.str());
  }
  image.clamped_count = clamped;
  if (clamped > 0) image.clamped = std::move(flags);
  return image;
}

Vec2 marginal_skewness(const ODImage& image, double offset, const Vec2& center, const Vec2& widths) {
  const auto& od = image.od;
  const auto lo_u = std::max(0, int(std::floor(center[0] - kSkewWindow * widths[0])));
  const auto hi_u = std::min(od.width - 1, int(std::ceil(center[0] + kSkewWindow * widths[0])));
  const auto lo_v = std::max(0, int(std::floor(center[1] - kSkewWindow * widths[1])));
  const auto hi_v = std::min(od.height - 1, int(std::ceil(center[1] + kSkewWindow * widths[1])));
  if (lo_u > hi_u || lo_v > hi_v) return {double(NAN), double(NAN)};
  std::vector<double> cols(hi_u - lo_u + 1, 0.0), rows(hi_v - lo_v + 1, 0.0);
  for (int row = lo_v; row <= hi_v; ++row) {
    for (int col = lo_u; col <= hi_u; ++col) {
      if (!image.usable(std::size_t(row) * od.width + col)) continue;
      const double value = od.at(col, row) - offset;
      cols[col - lo_u] += value;
      rows[row - lo_v] += value;
    }
  }
  auto skewness = [](const std::vector<double>& m) {
    double total = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      total += m[k];
      mean += k * m[k];
    }
    if (!(total > 0.0)) return double(NAN);
    mean /= total;
    double m2 = 0.0, m3 = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double d = k - mean;
      m2 += d * d * m[k];
      m3 += d * d * d * m[k];
    }
    m2 /= total;
    m3 /= total;
    if (!(m2 > 0.0)) return double(NAN);
    return m3 / std::pow(m2, 1.5);
  };
  return {skewness(cols), skewness(rows)};
}

GaussianFit fit_gaussian(const ODImage& image, const FitOptions& options) {
  const auto& od = image.od;
  std::vector<Sample> samples;
  samples.reserve(od.data.size());
  for (int row = 0; row < od.height; ++row) {
    for (int col = 0; col < od.width; ++col) {
      const std::size_t i = std::size_t(row) * od.width + col;
      if (!std::isfinite(od.data[i])) throw Error(ErrorCode::InvalidArgument, "image contains non-finite values");
      if (image.usable(i)) samples.push_back({double(col), double(row), double(od.data[i])});
    }
  }
  if (samples.size() <= 6) throw Error(ErrorCode::FitDegenerate, "too few usable pixels");

  Vec6 p = initial_guess(image);
  Mat6 jtj;
  Vec6 jtr;
  double ssr = normal_equations(samples, p, jtj, jtr);
  double lambda = 1e-3;
  bool converged = ssr == 0.0;
  int iteration = 0;

  while (!converged) {
    if (iteration >= options.max_iterations) {
      std::ostringstream msg;
      msg << "Gaussian fit did not converge in " << options.max_iterations << " iterations";
      throw Error(ErrorCode::NoConvergence, msg.str());
    }
    ++iteration;
    Mat6 damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal();
    const Eigen::LDLT<Mat6> ldlt(damped);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorCode::FitDegenerate, "normal equations are not positive definite");
    }
    const Vec6 step = -ldlt.solve(jtr);
    const Vec6 trial = p + step;
    const double trial_ssr =
        (trial[kSu] > 0.0 && trial[kSv] > 0.0) ? sum_squares(samples, trial) : INFINITY;

    if (trial_ssr < ssr) {
      const double reduction = ssr - trial_ssr;
      p = trial;
      const double previous = ssr;
      ssr = normal_equations(samples, p, jtj, jtr);
      lambda = std::max(lambda / 10.0, 1e-12);
      const bool small_step = (step.cwiseAbs().array() <= 1e-10 * (p.cwiseAbs().array() + 1e-3)).all();
      if (reduction <= 1e-13 * previous || small_step || ssr == 0.0) converged = true;
    } else {
      lambda *= 10.0;
      // No representable improvement left: we are at the minimum.
      if (lambda > 1e16) converged = true;
    }
  }

  if (!(p[kAmp] > 0.0)) throw Error(ErrorCode::FitDegenerate, "fit collapsed to an offset-only model");

  GaussianFit fit;
  fit.amplitude = p[kAmp];
  fit.center = {p[kU0], p[kV0]};
  fit.widths = {std::abs(p[kSu]), std::abs(p[kSv])};
  fit.offset = p[kOff];
  fit.iterations = iteration;
  fit.converged = true;

  const Eigen::LDLT<Mat6> normal(jtj);
  if (normal.info() != Eigen::Success || !normal.isPositive()) {
    throw Error(ErrorCode::FitDegenerate, "normal equations are not positive definite");
  }
  const Mat6 covariance = (ssr / double(samples.size() - 6)) * normal.solve(Mat6::Identity());
  fit.center_uncertainty = {std::sqrt(std::max(covariance(kU0, kU0), 0.0)),
                            std::sqrt(std::max(covariance(kV0, kV0), 0.0))};
  fit.residual_skewness = marginal_skewness(image, fit.offset, fit.center, fit.widths);
  fit.snr = fit.offset > 0.0 ? fit.amplitude / fit.offset : INFINITY;
  return fit;
}

const char* to_string(QcFailure failure) noexcept {
  switch (failure) {
    case QcFailure::NotConverged: return "not_converged";
    case QcFailure::CenterUncertainty: return "center_uncertainty";
    case QcFailure::Skewness: return "skewness";
    case QcFailure::Snr: return "snr";
  }
  return "unknown";
}

QcVerdict quality_gate(const GaussianFit& fit, const QcThresholds& thresholds) {
  QcVerdict verdict;
  if (!fit.converged) verdict.reasons.push_back(QcFailure::NotConverged);
  const auto& unc = fit.center_uncertainty;
  if (!(unc[0] < thresholds.max_center_uncertainty_px && unc[1] < thresholds.max_center_uncertainty_px)) {
    verdict.reasons.push_back(QcFailure::CenterUncertainty);
  }
  const auto& skew = fit.residual_skewness;
  if (!(std::abs(skew[0]) < thresholds.max_abs_skewness && std::abs(skew[1]) < thresholds.max_abs_skewness)) {
    verdict.reasons.push_back(QcFailure::Skewness);
  }
  if (!(fit.snr > thresholds.min_snr)) verdict.reasons.push_back(QcFailure::Snr);
  verdict.passed = verdict.reasons.empty();
  return verdict;
}

double background_od_noise(double photon_noise_scale, const CameraModel& camera) {
  return photon_noise_scale * std::sqrt(2.0 * (camera.reference_counts + camera.dark_counts)) /
         camera.reference_counts;
}

double photon_scale_for_snr(double peak_od, double snr, const CameraModel& camera) {
  return peak_od / (snr * background_od_noise(1.0, camera));
}

}  // namespace buoy
