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

#include "buoy/protocol.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "buoy/errors.hpp"

namespace buoy {
namespace {

struct Moments {
  Vec2 mean = Vec2::Zero();
  Vec2 stddev = Vec2::Zero();  // sample (n-1) normalization; zero for n == 1
};

Moments moments(const std::vector<Vec2>& points) {
  Moments m;
  for (const auto& p : points) m.mean += p;
  m.mean /= double(points.size());
  if (points.size() > 1) {
    Vec2 ss = Vec2::Zero();
    for (const auto& p : points) ss += (p - m.mean).cwiseAbs2();
    m.stddev = (ss / double(points.size() - 1)).cwiseSqrt();
  }
  return m;
}

std::string describe(const BiasSetting& b) {
  std::ostringstream out;
  out << "(" << b.ix << ", " << b.iy << ", " << b.iz << ") A";
  return out.str();
}

Vec2 project(const ShotConfig& config, const Vec3& lab) {
  const auto [h_axis, v_axis] = config.geometry.image_axes();
  const double c = std::cos(config.misalignment_rad);
  const double s = std::sin(config.misalignment_rad);
  const double h = lab[h_axis];
  const double v = lab[v_axis];
  return Vec2(c * h - s * v, s * h + c * v) / config.geometry.object_pixel_mm();
}

Vec3 trap_zero(const ShotConfig& config, const BiasSetting& bias, int polarity) {
  return displaced_zero_inhomogeneous(QuadrupoleParams{polarity * config.quadrupole_strength},
                                      config.external_field(bias));
}

}  // namespace

void BiasSetting::validate(double supply_limit) const {
  for (double current : {ix, iy, iz}) {
    if (!std::isfinite(current) || std::abs(current) > supply_limit) {
      throw Error(ErrorCode::InvalidArgument, "bias current " + describe(*this) + " exceeds the supply limit");
    }
  }
}

AlphaCoefficients compute_alpha(const CoilAssembly& assembly, const BiasCoilNames& names,
                                const Vec3& center) {
  const FieldModel model(assembly);
  AlphaCoefficients alpha;
  const std::array<const std::string*, 3> pairs{&names.x, &names.y, &names.z};
  for (int i = 0; i < 3; ++i) alpha.field_per_amp.col(i) = model.unit_field(*pairs[i], center);
  alpha.x = alpha.field_per_amp(0, 0);
  alpha.y = alpha.field_per_amp(1, 1);
  alpha.z = alpha.field_per_amp(2, 2);
  const char* axes = "xyz";
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double cross = std::abs(alpha.field_per_amp(j, i));
      if (cross > 0.01 * std::abs(alpha.field_per_amp(i, i))) {
        std::ostringstream msg;
        msg << "bias pair '" << *pairs[i] << "' produces a " << axes[j] << " field of " << cross
            << " G/A, more than 1% of its " << axes[i] << " field";
        alpha.warnings.push_back(msg.str());
      }
    }
  }
  return alpha;
}

const char* to_string(ShotMode mode) noexcept { return mode == ShotMode::Fast ? "fast" : "full"; }

ShotMode shot_mode_from_string(const std::string& text) {
  if (text == "fast") return ShotMode::Fast;
  if (text == "full") return ShotMode::Full;
  throw Error(ErrorCode::ConfigError, "mode must be 'fast' or 'full', got '" + text + "'");
}

Vec2 ShotConfig::principal() const {
  return principal_point.allFinite() ? principal_point : geometry.center();
}

ExternalField ShotConfig::external_field(const BiasSetting& bias) const {
  return ExternalField{stray_field + alpha.bias_field(bias), stray_gradient};
}

Vec2 ideal_position(const ShotConfig& config, const BiasSetting& bias, int polarity) {
  return config.principal() + project(config, trap_zero(config, bias, polarity));
}

ShotRecord run_shot(const ShotConfig& config, const BiasSetting& bias, int polarity,
                    std::uint64_t seed, std::int64_t shot_id) {
  if (polarity != 1 && polarity != -1) throw Error(ErrorCode::InvalidArgument, "polarity must be +1 or -1");
  bias.validate(config.supply_limit);

  ShotRecord record;
  record.shot_id = shot_id;
  record.bias = bias;
  record.polarity = polarity;
  record.seed = seed;
  record.mode = config.mode;

  const Vec2 ideal = ideal_position(config, bias, polarity);

  if (config.mode == ShotMode::Fast) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double pix_um = config.geometry.object_pixel_mm() * 1e3;
    const double dy = normal(rng) * config.noise.center_rms_um.x() / pix_um;
    const double dz = normal(rng) * config.noise.center_rms_um.y() / pix_um;
    record.fitted_center = ideal + Vec2(dy, dz);
    record.qc_passed = true;
    return record;
  }

  CloudModel cloud;
  cloud.temperature_uK = config.temperature_uK;
  cloud.include_gravity = config.include_gravity;
  cloud.field_state = FieldState{QuadrupoleParams{polarity * config.quadrupole_strength},
                                 config.external_field(bias)};
  cloud.peak_od = config.peak_od;
  if (config.od_field_coupling > 0.0) {
    cloud.peak_od /= 1.0 + config.od_field_coupling * cloud.field_state.external.homogeneous.norm();
  }
  const Vec2 offset = ideal - config.geometry.center();
  const ODImage truth = synthesize_od(cloud, config.geometry, offset);
  const FrameTriplet frames =
      apply_noise(truth, config.noise.photon_noise_scale, config.noise.offset_drift, seed, config.noise.camera);
  try {
    const ODImage measured = compute_od(frames, config.geometry);
    const GaussianFit fit = fit_gaussian(measured);
    const QcVerdict verdict = quality_gate(fit, config.qc);
    record.qc_passed = verdict.passed;
    record.qc_reasons = verdict.reasons;
    if (verdict.passed) record.fitted_center = fit.center;
  } catch (const Error& e) {
    record.qc_passed = false;
    record.qc_reasons = {QcFailure::NotConverged};
    record.failure = e.what();
  }
  return record;
}

std::vector<ShotRecord> run_campaign(const ShotConfig& config, const CampaignPlan& plan, unsigned workers) {
  if (plan.shots_per_condition < 1) throw Error(ErrorCode::InvalidArgument, "shots_per_condition must be >= 1");
  const std::size_t per_bias = 2 * std::size_t(plan.shots_per_condition);
  const std::size_t total = per_bias * plan.grid.size();
  std::vector<ShotRecord> records(total);

  auto run_one = [&](std::size_t id) {
    const std::size_t k = id % per_bias;
    const int polarity = plan.schedule == PolaritySchedule::Alternating
                             ? (k % 2 == 0 ? 1 : -1)
                             : (k < std::size_t(plan.shots_per_condition) ? 1 : -1);
    records[id] = run_shot(config, plan.grid[id / per_bias], polarity, plan.base_seed + id,
                           static_cast<std::int64_t>(id));
  };

  workers = std::max(1u, workers);
  if (workers == 1 || total < 2) {
    for (std::size_t id = 0; id < total; ++id) run_one(id);
    return records;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::min<std::size_t>(workers, total); ++w) {
    pool.emplace_back([&] {
      for (std::size_t id = next++; id < total; id = next++) {
        try {
          run_one(id);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = total;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::vector<BiasSetting> bias_grid(const std::vector<double>& ix, const std::vector<double>& iy,
                                   const std::vector<double>& iz) {
  const std::vector<double> zero{0.0};
  const auto& xs = ix.empty() ? zero : ix;
  const auto& ys = iy.empty() ? zero : iy;
  const auto& zs = iz.empty() ? zero : iz;
  std::vector<BiasSetting> grid;
  for (double x : xs) {
    for (double y : ys) {
      for (double z : zs) grid.push_back({x, y, z});
    }
  }
  return grid;
}

const char* to_string(Estimator estimator) noexcept {
  return estimator == Estimator::Mean ? "mean" : "sigma_clipped";
}

Estimator estimator_from_string(const std::string& text) {
  if (text == "mean") return Estimator::Mean;
  if (text == "sigma_clipped") return Estimator::SigmaClipped;
  throw Error(ErrorCode::ConfigError, "estimator must be 'mean' or 'sigma_clipped', got '" + text + "'");
}

ClusterSummary summarize_cluster(const std::vector<ShotRecord>& records, Estimator estimator) {
  if (records.empty()) throw Error(ErrorCode::EmptyCluster, "no records");
  const auto& first = records.front();
  std::vector<Vec2> centers;
  for (const auto& r : records) {
    if (!(r.bias == first.bias) || r.polarity != first.polarity) {
      throw Error(ErrorCode::MixedCondition, "records mix bias settings or polarities");
    }
    if (r.qc_passed && r.fitted_center) centers.push_back(*r.fitted_center);
  }
  if (centers.empty()) {
    throw Error(ErrorCode::EmptyCluster, "no QC-passing shots at " + describe(first.bias));
  }

  if (estimator == Estimator::SigmaClipped) {
    constexpr double kClip = 3.0;
    constexpr int kMaxPasses = 5;
    for (int pass = 0; pass < kMaxPasses && centers.size() > 2; ++pass) {
      const Moments m = moments(centers);
      std::vector<Vec2> kept;
      for (const auto& c : centers) {
        const Vec2 d = (c - m.mean).cwiseAbs();
        if (d.x() <= kClip * m.stddev.x() && d.y() <= kClip * m.stddev.y()) kept.push_back(c);
      }
      if (kept.size() == centers.size() || kept.empty()) break;
      centers = std::move(kept);
    }
  }

  const Moments m = moments(centers);
  ClusterSummary summary;
  summary.bias = first.bias;
  summary.polarity = first.polarity;
  summary.mean_center = m.mean;
  summary.n_shots = static_cast<int>(centers.size());
  summary.estimator = estimator;
  if (centers.size() > 1) summary.center_stderr = m.stddev / std::sqrt(double(centers.size()));
  return summary;
}

std::vector<std::vector<ShotRecord>> group_by_condition(const std::vector<ShotRecord>& records) {
  std::vector<std::vector<ShotRecord>> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return g.front().bias == r.bias && g.front().polarity == r.polarity;
    });
    if (it == groups.end()) {
      groups.push_back({r});
    } else {
      it->push_back(r);
    }
  }
  return groups;
}

RhombusPoint rhombus(const ClusterSummary& positive, const ClusterSummary& negative) {
  if (!(positive.bias == negative.bias)) {
    throw Error(ErrorCode::MixedCondition, "clusters have different bias settings");
  }
  if (positive.polarity != 1 || negative.polarity != -1) {
    throw Error(ErrorCode::MixedCondition, "need one positive- and one negative-polarity cluster");
  }
  RhombusPoint point;
  point.bias = positive.bias;
  point.midpoint = 0.5 * (positive.mean_center + negative.mean_center);
  point.displacement = positive.mean_center - negative.mean_center;
  if (positive.center_stderr && negative.center_stderr) {
    const Vec2 combined = (positive.center_stderr->cwiseAbs2() + negative.center_stderr->cwiseAbs2()).cwiseSqrt();
    point.displacement_stderr = combined;
    point.midpoint_stderr = 0.5 * combined;
  }
  return point;
}

std::vector<RhombusPoint> rhombus_points(const std::vector<ClusterSummary>& clusters) {
  std::vector<RhombusPoint> points;
  std::vector<BiasSetting> seen;
  for (const auto& c : clusters) {
    if (std::find(seen.begin(), seen.end(), c.bias) != seen.end()) continue;
    seen.push_back(c.bias);
    const ClusterSummary* pos = nullptr;
    const ClusterSummary* neg = nullptr;
    for (const auto& other : clusters) {
      if (!(other.bias == c.bias)) continue;
      (other.polarity > 0 ? pos : neg) = &other;
    }
    if (pos == nullptr || neg == nullptr) {
      throw Error(ErrorCode::MixedCondition, "bias " + describe(c.bias) + " lacks one of the polarities");
    }
    points.push_back(rhombus(*pos, *neg));
  }
  return points;
}

AxisRegression compensation_regression(const std::vector<RhombusPoint>& points, Axis axis) {
  const int component = axis == Axis::Y ? 0 : 1;
  const std::size_t n = points.size();
  auto current = [&](const RhombusPoint& p) { return axis == Axis::Y ? p.bias.iy : p.bias.iz; };
  if (n < 2) throw Error(ErrorCode::DegenerateDesign, "need at least two points");

  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& p : points) {
    mean_x += current(p);
    mean_y += p.displacement[component];
  }
  mean_x /= double(n);
  mean_y /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double dx = current(p) - mean_x;
    sxx += dx * dx;
    sxy += dx * (p.displacement[component] - mean_y);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateDesign, "all currents on this axis are equal");

  AxisRegression fit;
  fit.axis = axis;
  fit.n_points = static_cast<int>(n);
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  if (fit.slope == 0.0 || !std::isfinite(fit.slope)) {
    throw Error(ErrorCode::ZeroSlope, "displacement does not depend on the current");
  }
  fit.current_at = -fit.intercept / fit.slope;
  const bool have_errors =
      std::all_of(points.begin(), points.end(), [](const RhombusPoint& p) { return p.displacement_stderr.has_value(); });
  if (have_errors) {
    // I@ = mean_x - mean_y / slope is linear-fractional in the displacements;
    // propagate each point's own stderr to first order.
    double var = 0.0;
    for (const auto& p : points) {
      const double dx = current(p) - mean_x;
      const double d = -1.0 / (double(n) * fit.slope) + mean_y * dx / (fit.slope * fit.slope * sxx);
      const double sigma = (*p.displacement_stderr)[component];
      var += d * d * sigma * sigma;
    }
    fit.crossing_stderr = std::sqrt(var);
  } else if (n > 2) {
    double ssr = 0.0;
    for (const auto& p : points) {
      const double r = p.displacement[component] - (fit.intercept + fit.slope * current(p));
      ssr += r * r;
    }
    const double s2 = ssr / double(n - 2);
    const double lever = fit.current_at - mean_x;
    fit.crossing_stderr = std::sqrt(s2 / (fit.slope * fit.slope) * (1.0 / double(n) + lever * lever / sxx));
  }
  return fit;
}

StrayEstimate infer_stray_field(const CompensationResult& result, const AlphaCoefficients& alpha) {
  StrayEstimate out;
  if (result.y) {
    if (alpha.y == 0.0) throw Error(ErrorCode::ZeroAlpha, "alpha_y is zero");
    out.y = -alpha.y * result.y->current_at;
  }
  if (result.z) {
    if (alpha.z == 0.0) throw Error(ErrorCode::ZeroAlpha, "alpha_z is zero");
    out.z = -alpha.z * result.z->current_at;
  }
  return out;
}

}  // namespace buoy
