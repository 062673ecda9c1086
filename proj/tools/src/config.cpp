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

#include "buoy/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "buoy/coil_io.hpp"
#include "buoy/errors.hpp"

namespace buoy::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "'" + key + "': " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) fail(context, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(context.empty() ? key : context + "." + key, "unknown key");
  }
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) fail(key, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) fail(key, "expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& key) {
  if (!j.is_string()) fail(key, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& key) {
  if (!j.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, key));
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector(const json& j, const std::string& key) {
  const auto v = numbers(j, key);
  if (v.size() != std::size_t(N)) fail(key, "expected " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = v[std::size_t(i)];
  return out;
}

void read_quadrupole(const json& j, ExperimentConfig& c) {
  check_keys(j, {"pair", "current_A", "strength_G_per_mm", "schedule", "common_mode_asymmetry"}, "quadrupole");
  if (j.contains("pair")) c.quadrupole_pair = text(j["pair"], "quadrupole.pair");
  if (j.contains("current_A")) c.quadrupole_current = number(j["current_A"], "quadrupole.current_A");
  if (j.contains("strength_G_per_mm")) {
    c.quadrupole_strength = number(j["strength_G_per_mm"], "quadrupole.strength_G_per_mm");
    if (!(*c.quadrupole_strength > 0.0)) fail("quadrupole.strength_G_per_mm", "must be positive");
  }
  if (j.contains("schedule")) {
    const auto s = text(j["schedule"], "quadrupole.schedule");
    if (s == "alternating") {
      c.schedule = PolaritySchedule::Alternating;
    } else if (s == "blocked") {
      c.schedule = PolaritySchedule::Blocked;
    } else {
      fail("quadrupole.schedule", "must be 'alternating' or 'blocked'");
    }
  }
  if (j.contains("common_mode_asymmetry")) {
    c.common_mode_asymmetry = number(j["common_mode_asymmetry"], "quadrupole.common_mode_asymmetry");
  }
}

void read_stray(const json& j, ExperimentConfig& c) {
  check_keys(j, {"homogeneous_G", "gradient_G_per_mm"}, "stray_field");
  if (j.contains("homogeneous_G")) c.stray.homogeneous = fixed_vector<3>(j["homogeneous_G"], "stray_field.homogeneous_G");
  if (j.contains("gradient_G_per_mm")) {
    const auto& g = j["gradient_G_per_mm"];
    if (!g.is_array() || g.size() != 3) fail("stray_field.gradient_G_per_mm", "expected a 3x3 array");
    for (int r = 0; r < 3; ++r) c.stray.gradient.row(r) = fixed_vector<3>(g[r], "stray_field.gradient_G_per_mm").transpose();
  }
}

void read_noise(const json& j, ExperimentConfig& c) {
  check_keys(j, {"center_rms_um", "photon_noise_scale", "offset_drift", "reference_counts", "dark_counts"}, "noise");
  if (j.contains("center_rms_um")) c.noise.center_rms_um = fixed_vector<2>(j["center_rms_um"], "noise.center_rms_um");
  if (j.contains("photon_noise_scale")) {
    c.noise.photon_noise_scale = number(j["photon_noise_scale"], "noise.photon_noise_scale");
  }
  if (j.contains("offset_drift")) c.noise.offset_drift = number(j["offset_drift"], "noise.offset_drift");
  if (j.contains("reference_counts")) {
    c.noise.camera.reference_counts = number(j["reference_counts"], "noise.reference_counts");
  }
  if (j.contains("dark_counts")) c.noise.camera.dark_counts = number(j["dark_counts"], "noise.dark_counts");
  if ((c.noise.center_rms_um.array() < 0.0).any() || c.noise.photon_noise_scale < 0.0) {
    fail("noise", "noise levels must be non-negative");
  }
}

void read_imaging(const json& j, ExperimentConfig& c) {
  check_keys(j, {"pixel_size_um", "width", "height", "axis", "magnification", "misalignment_rad", "principal_point_px"},
             "imaging");
  auto& g = c.imaging;
  if (j.contains("pixel_size_um")) g.pixel_size_um = number(j["pixel_size_um"], "imaging.pixel_size_um");
  if (j.contains("width")) g.width = integer(j["width"], "imaging.width");
  if (j.contains("height")) g.height = integer(j["height"], "imaging.height");
  if (j.contains("magnification")) g.magnification = number(j["magnification"], "imaging.magnification");
  if (j.contains("axis")) {
    const auto a = text(j["axis"], "imaging.axis");
    if (a == "x") {
      g.imaging_axis = 0;
    } else if (a == "y") {
      g.imaging_axis = 1;
    } else if (a == "z") {
      g.imaging_axis = 2;
    } else {
      fail("imaging.axis", "must be 'x', 'y' or 'z'");
    }
  }
  if (j.contains("misalignment_rad")) c.misalignment_rad = number(j["misalignment_rad"], "imaging.misalignment_rad");
  if (j.contains("principal_point_px")) {
    c.principal_point = fixed_vector<2>(j["principal_point_px"], "imaging.principal_point_px");
  }
  try {
    g.validate();
  } catch (const Error& e) {
    fail("imaging", e.what());
  }
}

void read_cloud(const json& j, ExperimentConfig& c) {
  check_keys(j, {"temperature_uK", "peak_od", "gravity", "od_field_coupling"}, "cloud");
  if (j.contains("temperature_uK")) c.temperature_uK = number(j["temperature_uK"], "cloud.temperature_uK");
  if (j.contains("peak_od")) c.peak_od = number(j["peak_od"], "cloud.peak_od");
  if (j.contains("gravity")) {
    if (!j["gravity"].is_boolean()) fail("cloud.gravity", "expected true or false");
    c.gravity = j["gravity"].get<bool>();
  }
  if (j.contains("od_field_coupling")) c.od_field_coupling = number(j["od_field_coupling"], "cloud.od_field_coupling");
  if (!(c.temperature_uK > 0.0)) fail("cloud.temperature_uK", "must be positive");
  if (!(c.peak_od > 0.0)) fail("cloud.peak_od", "must be positive");
}

void read_qc(const json& j, ExperimentConfig& c) {
  check_keys(j, {"max_center_uncertainty_px", "max_abs_skewness", "min_snr"}, "qc");
  if (j.contains("max_center_uncertainty_px")) {
    c.qc.max_center_uncertainty_px = number(j["max_center_uncertainty_px"], "qc.max_center_uncertainty_px");
  }
  if (j.contains("max_abs_skewness")) c.qc.max_abs_skewness = number(j["max_abs_skewness"], "qc.max_abs_skewness");
  if (j.contains("min_snr")) c.qc.min_snr = number(j["min_snr"], "qc.min_snr");
}

CoilAssembly read_assembly(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "reference") return reference_assembly();
    std::filesystem::path path(name);
    if (path.is_relative()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open assembly file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return assembly_from_json(buffer.str());
  }
  if (j.is_object()) return assembly_from_json(j.dump());
  fail("assembly", "expected \"reference\", a file path, or an inline assembly");
}

}  // namespace

ExperimentConfig config_from_json(const std::string& document, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("configuration is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"assembly", "bias_coils", "quadrupole", "stray_field", "bias_grid", "shots_per_condition", "mode",
              "estimator", "noise", "imaging", "cloud", "qc", "supply_limit_A", "base_seed"},
             "");
  ExperimentConfig c;
  if (j.contains("assembly")) c.assembly = read_assembly(j["assembly"], base_dir);
  if (j.contains("bias_coils")) {
    const auto& b = j["bias_coils"];
    check_keys(b, {"x", "y", "z"}, "bias_coils");
    if (b.contains("x")) c.bias_coils.x = text(b["x"], "bias_coils.x");
    if (b.contains("y")) c.bias_coils.y = text(b["y"], "bias_coils.y");
    if (b.contains("z")) c.bias_coils.z = text(b["z"], "bias_coils.z");
  }
  if (j.contains("quadrupole")) read_quadrupole(j["quadrupole"], c);
  if (j.contains("stray_field")) read_stray(j["stray_field"], c);
  if (j.contains("bias_grid")) {
    const auto& g = j["bias_grid"];
    check_keys(g, {"ix", "iy", "iz"}, "bias_grid");
    if (g.contains("ix")) c.ix = numbers(g["ix"], "bias_grid.ix");
    if (g.contains("iy")) c.iy = numbers(g["iy"], "bias_grid.iy");
    if (g.contains("iz")) c.iz = numbers(g["iz"], "bias_grid.iz");
  }
  if (j.contains("shots_per_condition")) {
    c.shots_per_condition = integer(j["shots_per_condition"], "shots_per_condition");
    if (c.shots_per_condition < 1) fail("shots_per_condition", "must be at least 1");
  }
  try {
    if (j.contains("mode")) c.mode = shot_mode_from_string(text(j["mode"], "mode"));
    if (j.contains("estimator")) c.estimator = estimator_from_string(text(j["estimator"], "estimator"));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (j.contains("noise")) read_noise(j["noise"], c);
  if (j.contains("imaging")) read_imaging(j["imaging"], c);
  if (j.contains("cloud")) read_cloud(j["cloud"], c);
  if (j.contains("qc")) read_qc(j["qc"], c);
  if (j.contains("supply_limit_A")) {
    c.supply_limit = number(j["supply_limit_A"], "supply_limit_A");
    if (!(c.supply_limit > 0.0)) fail("supply_limit_A", "must be positive");
  }
  if (j.contains("base_seed")) {
    if (!j["base_seed"].is_number_unsigned()) fail("base_seed", "expected a non-negative integer");
    c.base_seed = j["base_seed"].get<std::uint64_t>();
  }

  for (const auto& name : {c.quadrupole_pair, c.bias_coils.x, c.bias_coils.y, c.bias_coils.z}) {
    const auto logical = c.assembly.logical_currents();
    if (std::find(logical.begin(), logical.end(), name) == logical.end()) {
      fail("assembly", "has no logical current named '" + name + "'");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open configuration file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str(), path.parent_path());
}

Drive quadrupole_drive(const ExperimentConfig& config) { return {{config.quadrupole_pair, config.quadrupole_current}}; }

double quadrupole_strength(const ExperimentConfig& config) {
  if (config.quadrupole_strength) return *config.quadrupole_strength;
  const double q = gradient_matrix(config.assembly, quadrupole_drive(config), Vec3::Zero())(0, 0);
  if (!(std::abs(q) > 0.0)) throw Error(ErrorCode::ZeroQuadrupole, "quadrupole drive produces no gradient");
  return std::abs(q);
}

ShotConfig shot_config(const ExperimentConfig& config) {
  ShotConfig s;
  s.alpha = compute_alpha(config.assembly, config.bias_coils);
  s.quadrupole_strength = quadrupole_strength(config);
  s.stray_field = config.stray.homogeneous;
  s.stray_gradient = config.stray.gradient;
  s.geometry = config.imaging;
  if (config.principal_point) s.principal_point = *config.principal_point;
  s.misalignment_rad = config.misalignment_rad;
  s.mode = config.mode;
  s.noise = config.noise;
  s.temperature_uK = config.temperature_uK;
  s.peak_od = config.peak_od;
  s.include_gravity = config.gravity;
  s.od_field_coupling = config.od_field_coupling;
  s.qc = config.qc;
  s.supply_limit = config.supply_limit;
  return s;
}

CampaignPlan campaign_plan(const ExperimentConfig& config) {
  CampaignPlan plan;
  plan.grid = bias_grid(config.ix, config.iy, config.iz);
  plan.shots_per_condition = config.shots_per_condition;
  plan.base_seed = config.base_seed;
  plan.schedule = config.schedule;
  return plan;
}

}  // namespace buoy::cli
