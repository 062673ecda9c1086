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

#include "buoy/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "buoy/errors.hpp"
#include "buoy/format.hpp"
#include "buoy/records_io.hpp"
#include "buoy/stats.hpp"
#include "buoy/trap_model.hpp"

namespace buoy::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ojson num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_significant(v);
}

ojson vec(const auto& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

template <typename T>
ojson optional_vec(const std::optional<T>& v) {
  return v ? vec(*v) : ojson(nullptr);
}

ojson bias_json(const BiasSetting& b) { return {{"ix_A", num(b.ix)}, {"iy_A", num(b.iy)}, {"iz_A", num(b.iz)}}; }

fs::path write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return path;
}

fs::path write_json(const fs::path& path, const ojson& j) { return write_file(path, j.dump(2) + "\n"); }

std::string join(std::initializer_list<std::string> fields) {
  std::string line;
  for (const auto& f : fields) {
    if (!line.empty()) line += ',';
    line += f;
  }
  return line + "\n";
}

std::string describe(const BiasSetting& b) {
  return "Ix=" + format_number(b.ix) + " Iy=" + format_number(b.iy) + " Iz=" + format_number(b.iz);
}

struct Clustered {
  std::vector<ClusterSummary> clusters;
  std::vector<std::pair<BiasSetting, int>> empty;  // (bias, polarity) without a QC-passing shot
  std::vector<RhombusPoint> points;
};

Clustered cluster(const std::vector<ShotRecord>& records, Estimator estimator) {
  Clustered out;
  for (const auto& group : group_by_condition(records)) {
    try {
      out.clusters.push_back(summarize_cluster(group, estimator));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyCluster) throw;
      out.empty.emplace_back(group.front().bias, group.front().polarity);
    }
  }
  std::vector<BiasSetting> seen;
  for (const auto& c : out.clusters) {
    if (std::find(seen.begin(), seen.end(), c.bias) != seen.end()) continue;
    seen.push_back(c.bias);
    const ClusterSummary* pos = nullptr;
    const ClusterSummary* neg = nullptr;
    for (const auto& other : out.clusters) {
      if (other.bias == c.bias) (other.polarity > 0 ? pos : neg) = &other;
    }
    if (pos && neg) out.points.push_back(rhombus(*pos, *neg));
  }
  return out;
}

std::vector<ShotRecord> read_records(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open records file " + path.string());
  return read_shot_csv(in);
}

double pixel_um(const ExperimentConfig& config) { return config.imaging.object_pixel_mm() * 1e3; }

}  // namespace

Paths cmd_field(const ExperimentConfig& config, const FieldLine& line, const fs::path& out) {
  if (line.axis < 0 || line.axis > 2) throw Error(ErrorCode::InvalidArgument, "axis must be x, y or z");
  if (line.samples < 2) throw Error(ErrorCode::InvalidArgument, "samples must be at least 2");
  if (!(line.to_mm > line.from_mm)) throw Error(ErrorCode::InvalidArgument, "range end must exceed its start");
  const FieldModel model(config.assembly);
  const Drive drive = line.drive.empty() ? quadrupole_drive(config) : line.drive;
  const Vec3 b0 = model.field(drive, Vec3::Zero());
  const double q = model.gradient(drive, Vec3::Zero())(0, 0);
  const Vec3 shape(q, q, -2.0 * q);

  std::string csv = "position_mm,Bx_exact_G,By_exact_G,Bz_exact_G,Bx_quad_G,By_quad_G,Bz_quad_G,deviation_G,"
                    "B_magnitude_G\n";
  for (int k = 0; k < line.samples; ++k) {
    const double t = double(k) / double(line.samples - 1);
    const double s = line.from_mm * (1.0 - t) + line.to_mm * t;
    Vec3 at = Vec3::Zero();
    at[line.axis] = s;
    const Vec3 exact = model.field(drive, at);
    const Vec3 quad = b0 + shape.cwiseProduct(at);
    csv += join({format_number(s), format_number(exact.x()), format_number(exact.y()), format_number(exact.z()),
                 format_number(quad.x()), format_number(quad.y()), format_number(quad.z()),
                 format_number((exact - quad).norm()), format_number(exact.norm())});
  }
  return {write_file(out / "field.csv", csv)};
}

Paths cmd_zero(const ExperimentConfig& config, const fs::path& out) {
  const FieldModel model(config.assembly);
  const Drive drive = quadrupole_drive(config);
  const double q = quadrupole_strength(config);
  const Vec3 analytic = displaced_zero_inhomogeneous(QuadrupoleParams{q}, config.stray);
  const auto& stray = config.stray;
  const NewtonResult newton = find_zero_numerical(
      [&](const Vec3& r) { return Vec3(model.field(drive, r) + stray.homogeneous + stray.gradient * r); },
      Vec3::Zero());
  ojson j;
  j["quadrupole_strength_G_per_mm"] = num(q);
  j["analytic_r0_mm"] = vec(analytic);
  j["numerical_r0_mm"] = vec(newton.root);
  j["disagreement_um"] = num((analytic - newton.root).norm() * 1e3);
  j["newton_iterations"] = newton.iterations;
  j["newton_residual_G"] = num(newton.residual);
  return {write_json(out / "zero.json", j)};
}

Paths cmd_shots(const ExperimentConfig& config, unsigned workers, const fs::path& out, std::ostream& progress) {
  const ShotConfig shot = shot_config(config);
  const CampaignPlan plan = campaign_plan(config);
  const auto records = run_campaign(shot, plan, workers);

  std::ostringstream csv;
  write_shot_csv(csv, records);

  const auto groups = group_by_condition(records);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto passed = std::count_if(groups[i].begin(), groups[i].end(), [](const auto& r) { return r.qc_passed; });
    progress << "condition " << i + 1 << "/" << groups.size() << " " << describe(groups[i].front().bias)
             << " polarity " << (groups[i].front().polarity > 0 ? "+" : "-") << ": " << passed << "/"
             << groups[i].size() << " shots passed QC\n";
  }

  const Clustered c = cluster(records, config.estimator);
  ojson j;
  j["mode"] = to_string(config.mode);
  j["estimator"] = to_string(config.estimator);
  j["n_records"] = records.size();
  j["n_qc_passed"] = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.qc_passed; });
  j["clusters"] = ojson::array();
  for (const auto& s : c.clusters) {
    j["clusters"].push_back({{"bias", bias_json(s.bias)},
                             {"polarity", s.polarity},
                             {"mean_center_px", vec(s.mean_center)},
                             {"center_stderr_px", optional_vec(s.center_stderr)},
                             {"n_shots", s.n_shots}});
  }
  j["empty_clusters"] = ojson::array();
  for (const auto& [bias, polarity] : c.empty) j["empty_clusters"].push_back({{"bias", bias_json(bias)}, {"polarity", polarity}});
  j["rhombus"] = ojson::array();
  for (const auto& p : c.points) {
    j["rhombus"].push_back({{"bias", bias_json(p.bias)},
                            {"midpoint_px", vec(p.midpoint)},
                            {"displacement_px", vec(p.displacement)},
                            {"midpoint_stderr_px", optional_vec(p.midpoint_stderr)},
                            {"displacement_stderr_px", optional_vec(p.displacement_stderr)}});
  }
  return {write_file(out / "shots.csv", csv.str()), write_json(out / "clusters.json", j)};
}

Paths cmd_compensate(const ExperimentConfig& config, const fs::path& records_path, const fs::path& out) {
  const Clustered c = cluster(read_records(records_path), config.estimator);
  auto distinct = [&](auto current) {
    std::vector<double> values;
    for (const auto& p : c.points) {
      if (std::find(values.begin(), values.end(), current(p)) == values.end()) values.push_back(current(p));
    }
    return values.size();
  };

  CompensationResult result;
  Paths written;
  for (Axis axis : {Axis::Y, Axis::Z}) {
    auto current = [axis](const RhombusPoint& p) { return axis == Axis::Y ? p.bias.iy : p.bias.iz; };
    if (distinct(current) < 2) continue;
    const AxisRegression fit = compensation_regression(c.points, axis);
    (axis == Axis::Y ? result.y : result.z) = fit;
    const int k = axis == Axis::Y ? 0 : 1;
    std::vector<RhombusPoint> sorted = c.points;
    std::stable_sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) { return current(a) < current(b); });
    std::string csv = "current_A,displacement_px,displacement_stderr_px,fitted_px\n";
    for (const auto& p : sorted) {
      csv += join({format_number(current(p)), format_number(p.displacement[k]),
                   p.displacement_stderr ? format_number((*p.displacement_stderr)[k]) : std::string(),
                   format_number(fit.intercept + fit.slope * current(p))});
    }
    written.push_back(write_file(out / (axis == Axis::Y ? "regression_y.csv" : "regression_z.csv"), csv));
  }
  if (!result.y && !result.z) {
    throw Error(ErrorCode::DegenerateDesign, "records span fewer than two bias currents on both the y and z axes");
  }

  const AlphaCoefficients alpha = compute_alpha(config.assembly, config.bias_coils);
  const StrayEstimate stray = infer_stray_field(result, alpha);
  ojson j;
  j["estimator"] = to_string(config.estimator);
  j["alpha_G_per_A"] = {{"x", num(alpha.x)}, {"y", num(alpha.y)}, {"z", num(alpha.z)}};
  j["alpha_warnings"] = alpha.warnings;
  auto axis_json = [&](const std::optional<AxisRegression>& fit, std::optional<double> field, double a) {
    if (!fit) return ojson(nullptr);
    ojson r;
    r["current_at_A"] = num(fit->current_at);
    r["crossing_stderr_A"] = fit->crossing_stderr ? num(*fit->crossing_stderr) : ojson(nullptr);
    r["slope_px_per_A"] = num(fit->slope);
    r["intercept_px"] = num(fit->intercept);
    r["n_points"] = fit->n_points;
    r["stray_field_G"] = num(*field);
    r["stray_field_stderr_G"] = fit->crossing_stderr ? num(std::abs(a) * *fit->crossing_stderr) : ojson(nullptr);
    return r;
  };
  j["y"] = axis_json(result.y, stray.y, alpha.y);
  j["z"] = axis_json(result.z, stray.z, alpha.z);
  written.insert(written.begin(), write_json(out / "compensation.json", j));
  return written;
}

Paths cmd_allan(const ExperimentConfig& config, const fs::path& records_path, std::vector<int> sizes,
                std::size_t condition, const fs::path& out) {
  std::ifstream in(records_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open records file " + records_path.string());

  std::vector<std::pair<std::string, std::vector<double>>> series;
  const bool shots = looks_like_shot_csv(in);
  std::optional<std::pair<BiasSetting, int>> selected;
  if (shots) {
    auto records = read_shot_csv(in);
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.shot_id < b.shot_id; });
    std::vector<std::pair<BiasSetting, int>> conditions;
    for (const auto& r : records) {
      const std::pair key{r.bias, r.polarity};
      if (std::find(conditions.begin(), conditions.end(), key) == conditions.end()) conditions.push_back(key);
    }
    if (condition >= conditions.size()) {
      throw Error(ErrorCode::InvalidArgument, "condition index " + std::to_string(condition) + " out of range; file has " +
                                                  std::to_string(conditions.size()) + " condition(s)");
    }
    selected = conditions[condition];
    std::vector<double> y, z;
    for (const auto& r : records) {
      if (!r.qc_passed || !r.fitted_center || r.bias != selected->first || r.polarity != selected->second) continue;
      y.push_back(r.fitted_center->x());
      z.push_back(r.fitted_center->y());
    }
    series = {{"y", std::move(y)}, {"z", std::move(z)}};
  } else {
    series = {{"series", read_series_csv(in)}};
  }

  const double q = shots ? quadrupole_strength(config) : 0.0;
  Paths written;
  ojson floors;
  for (const auto& [name, values] : series) {
    const auto used = sizes.empty() ? default_allan_sizes(values.size()) : sizes;
    if (used.empty()) throw Error(ErrorCode::TooFewGroups, "series '" + name + "' is too short for any ensemble size");
    const AllanCurve curve = allan_deviation(values, used);
    std::ostringstream csv;
    write_allan_csv(csv, curve);
    written.push_back(write_file(out / (shots ? "allan_" + name + ".csv" : std::string("allan.csv")), csv.str()));

    ojson f;
    f["samples"] = values.size();
    try {
      f["slope_1_100"] = num(log_log_slope(curve, 1, 100));
    } catch (const Error&) {
      f["slope_1_100"] = nullptr;
    }
    try {
      const NoiseFloor floor = noise_floor(curve);
      f["floor_px"] = num(floor.floor);
      f["spread_px"] = num(floor.spread);
      f["entries_used"] = floor.entries_used;
      if (shots) {
        const double um = floor.floor * pixel_um(config);
        f["floor_um"] = num(um);
        f["delta_B_G"] = num(field_uncertainty(um, name == "y" ? q : 2.0 * q));
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewEntries) throw;
      f["floor_px"] = nullptr;
    }
    floors[name] = f;
  }
  if (selected) floors["condition"] = {{"bias", bias_json(selected->first)}, {"polarity", selected->second}};
  written.push_back(write_json(out / "noise_floor.json", floors));
  return written;
}

Paths cmd_sensitivity(const ExperimentConfig& config, const SensitivitySweep& sweep, const fs::path& out) {
  if (sweep.steps < 2) throw Error(ErrorCode::InvalidArgument, "steps must be at least 2");
  if (!(sweep.to_A > sweep.from_A)) throw Error(ErrorCode::InvalidArgument, "range end must exceed its start");
  std::string csv = "delta_I_A,axial_shift_um,shift_px\n";
  for (int k = 0; k < sweep.steps; ++k) {
    const double t = double(k) / double(sweep.steps - 1);
    const double delta = sweep.from_A * (1.0 - t) + sweep.to_A * t;
    const double shift = current_sensitivity(config.assembly, config.quadrupole_current, delta,
                                             config.common_mode_asymmetry, config.quadrupole_pair);
    csv += join({format_number(delta), format_number(shift), format_number(shift / pixel_um(config))});
  }
  return {write_file(out / "sensitivity.csv", csv)};
}

}  // namespace buoy::cli
