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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "buoy/cli/commands.hpp"
#include "buoy/records_io.hpp"

namespace buoy {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("buoy_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome buoy_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "buoy");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::vector<std::vector<double>> csv_rows(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream fields(line);
    std::string f;
    while (std::getline(fields, f, ',')) row.push_back(f.empty() ? NAN : std::stod(f));
    rows.push_back(row);
  }
  return rows;
}

json error_of(const Outcome& o) { return json::parse(o.err.substr(o.err.rfind('{'))); }

TEST_CASE("usage errors and help") {
  CHECK(buoy_cli({}).code == 1);
  CHECK(error_of(buoy_cli({"bogus"}))["error"] == "UsageError");
  CHECK(buoy_cli({"--help"}).code == 0);
  CHECK(buoy_cli({"compensate"}).code == 1);  // --records missing
  CHECK(buoy_cli({"--mode", "slow", "zero"}).code == 1);
}

TEST_CASE("configuration errors exit with status 1") {
  TempDir dir;
  const Outcome missing = buoy_cli({"zero", "--config", (dir / "nope.json").string(), "--out", dir.path.string()});
  CHECK(missing.code == 1);
  CHECK(error_of(missing)["error"] == "IoError");
  spit(dir / "bad.json", R"({"stray_field": {"homogenous_G": [0, 0, 0]}})");
  const Outcome typo = buoy_cli({"zero", "--config", (dir / "bad.json").string(), "--out", dir.path.string()});
  CHECK(typo.code == 1);
  CHECK(error_of(typo)["error"] == "ConfigError");
  CHECK(error_of(typo)["message"].get<std::string>().find("stray_field.homogenous_G") != std::string::npos);
  spit(dir / "coil.json", R"({"assembly": {"members": []}})");
  CHECK(buoy_cli({"zero", "--config", (dir / "coil.json").string()}).code == 1);
}

TEST_CASE("field command") {
  TempDir dir;
  SUBCASE("zero drive gives zero field") {
    REQUIRE(buoy_cli({"field", "--drive", "mot=0", "--out", dir.path.string()}).code == 0);
    for (const auto& row : csv_rows(dir / "field.csv")) {
      for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k] == 0.0);
    }
  }
  SUBCASE("reference MOT stays within 10 uG of the quadrupole model") {
    for (const char* axis : {"x", "z"}) {
      REQUIRE(buoy_cli({"field", "--axis", axis, "--out", dir.path.string()}).code == 0);
      const auto rows = csv_rows(dir / "field.csv");
      CHECK(rows.size() == 101u);
      CHECK(rows.front()[0] == -0.05);
      CHECK(rows.back()[0] == 0.05);
      for (const auto& row : rows) CHECK(row[7] < 1e-5);
    }
  }
  SUBCASE("bad drive entries") {
    CHECK(buoy_cli({"field", "--drive", "mot", "--out", dir.path.string()}).code == 1);
    CHECK(error_of(buoy_cli({"field", "--drive", "nope=1", "--out", dir.path.string()}))["error"] == "UnknownCoil");
    CHECK(buoy_cli({"field", "--samples", "1", "--out", dir.path.string()}).code == 1);
  }
}

TEST_CASE("zero command") {
  TempDir dir;
  REQUIRE(buoy_cli({"zero", "--out", dir.path.string()}).code == 0);
  json z = json::parse(slurp(dir / "zero.json"));
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(z["analytic_r0_mm"][i].get<double>()) < 1e-12);
    CHECK(std::abs(z["numerical_r0_mm"][i].get<double>()) < 1e-9);
  }

  spit(dir / "stray.json",
       R"({"quadrupole": {"strength_G_per_mm": 2.5}, "stray_field": {"homogeneous_G": [0, 0.025, 0]}})");
  REQUIRE(buoy_cli({"zero", "--config", (dir / "stray.json").string(), "--out", dir.path.string()}).code == 0);
  z = json::parse(slurp(dir / "zero.json"));
  CHECK(z["analytic_r0_mm"][1].get<double>() == doctest::Approx(-0.010).epsilon(1e-9));
  CHECK(z["disagreement_um"].get<double>() < 0.1);

  spit(dir / "singular.json", R"({"quadrupole": {"strength_G_per_mm": 2.5},
      "stray_field": {"gradient_G_per_mm": [[-2.5, 0, 0], [0, -2.5, 0], [0, 0, 5]]}})");
  const Outcome singular = buoy_cli({"zero", "--config", (dir / "singular.json").string(), "--out", dir.path.string()});
  CHECK(singular.code == 2);
  CHECK(error_of(singular)["error"] == "SingularTrap");
  CHECK(error_of(singular)["message"].get<std::string>().find("singular values") != std::string::npos);
}

TEST_CASE("noiseless shots give identical midpoints") {
  TempDir dir;
  spit(dir / "c.json", R"({"stray_field": {"homogeneous_G": [0, 0.02, 0.01]},
      "bias_grid": {"iy": [-0.1, 0.2]}, "shots_per_condition": 10,
      "noise": {"center_rms_um": [0, 0]}})");
  const Outcome o = buoy_cli({"shots", "--config", (dir / "c.json").string(), "--out", dir.path.string()});
  REQUIRE(o.code == 0);
  CHECK(o.err.find("condition 4/4") != std::string::npos);
  std::ifstream in(dir / "shots.csv");
  CHECK(read_shot_csv(in).size() == 40u);
  const json c = json::parse(slurp(dir / "clusters.json"));
  REQUIRE(c["rhombus"].size() == 2u);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(c["rhombus"][0]["midpoint_px"][k].get<double>() - c["rhombus"][1]["midpoint_px"][k].get<double>()) <
          1e-9);
  }
}

TEST_CASE("polarity clusters overlap at the compensation current") {
  TempDir dir;
  const double alpha_y = compute_alpha(reference_assembly()).y;
  const double i_at = -0.03 / alpha_y;
  spit(dir / "c.json", R"({"stray_field": {"homogeneous_G": [0, 0.03, 0]}, "shots_per_condition": 50,
      "bias_grid": {"iy": [)" + std::to_string(i_at) + "]}}");
  REQUIRE(buoy_cli({"shots", "--config", (dir / "c.json").string(), "--out", dir.path.string()}).code == 0);
  const json c = json::parse(slurp(dir / "clusters.json"));
  const double d = c["rhombus"][0]["displacement_px"][0].get<double>();
  const double s = c["rhombus"][0]["displacement_stderr_px"][0].get<double>();
  CHECK(std::abs(d) < 3.0 * s);
}

TEST_CASE("full-mode campaign runs end to end") {
  TempDir dir;
  spit(dir / "c.json", R"({"mode": "full", "shots_per_condition": 3, "bias_grid": {"iy": [0.0, 0.1]}})");
  REQUIRE(buoy_cli({"shots", "--config", (dir / "c.json").string(), "--out", dir.path.string(), "--workers", "2"}).code ==
          0);
  const json c = json::parse(slurp(dir / "clusters.json"));
  CHECK(c["mode"] == "full");
  CHECK(c["n_records"] == 12);
  CHECK(c["rhombus"].size() == 2u);
}

std::string fixture_records(const std::vector<double>& currents, bool z_axis, auto displacement) {
  std::vector<ShotRecord> records;
  std::int64_t id = 0;
  for (double i : currents) {
    const BiasSetting bias = z_axis ? BiasSetting{0, 0, i} : BiasSetting{0, i, 0};
    const double d = displacement(i);
    for (int polarity : {1, -1}) {
      for (double jitter : {-0.01, 0.01}) {
        ShotRecord r;
        r.shot_id = id++;
        r.bias = bias;
        r.polarity = polarity;
        r.qc_passed = true;
        const double v = 100.0 + polarity * d / 2.0 + jitter;
        r.fitted_center = z_axis ? Vec2(100.0, v) : Vec2(v, 100.0);
        records.push_back(r);
      }
    }
  }
  std::ostringstream out;
  write_shot_csv(out, records);
  return out.str();
}

TEST_CASE("compensate command on constructed fixtures") {
  TempDir dir;
  spit(dir / "y.csv", fixture_records({-0.6, -0.4, -0.2, 0.0, 0.2}, false, [](double i) { return 3.0 * (i + 0.27); }));
  REQUIRE(buoy_cli({"compensate", "--records", (dir / "y.csv").string(), "--out", dir.path.string()}).code == 0);
  json c = json::parse(slurp(dir / "compensation.json"));
  CHECK(c["y"]["current_at_A"].get<double>() == doctest::Approx(-0.27).epsilon(1e-8));
  CHECK(c["z"].is_null());
  CHECK(csv_rows(dir / "regression_y.csv").size() == 5u);

  spit(dir / "z.csv", fixture_records({0.0, 0.02, 0.04, 0.06}, true, [](double i) { return -40.0 * (i - 0.035); }));
  REQUIRE(buoy_cli({"compensate", "--records", (dir / "z.csv").string(), "--out", dir.path.string()}).code == 0);
  c = json::parse(slurp(dir / "compensation.json"));
  CHECK(c["z"]["current_at_A"].get<double>() == doctest::Approx(0.035).epsilon(1e-8));
  CHECK(c["z"]["stray_field_G"].get<double>() == doctest::Approx(-0.035 * c["alpha_G_per_A"]["z"].get<double>()));

  spit(dir / "one.csv", fixture_records({0.1}, false, [](double) { return 1.0; }));
  const Outcome degenerate = buoy_cli({"compensate", "--records", (dir / "one.csv").string(), "--out", dir.path.string()});
  CHECK(degenerate.code == 1);
  CHECK(error_of(degenerate)["error"] == "DegenerateDesign");
}

TEST_CASE("closed loop: shots then compensate recovers the stray field") {
  TempDir dir;
  spit(dir / "c.json", R"({"stray_field": {"homogeneous_G": [0, 0.03, -0.01]},
      "bias_grid": {"iy": [-0.5, -0.4, -0.3, -0.2, -0.1], "iz": [-0.02, 0.0, 0.02]},
      "shots_per_condition": 100, "base_seed": 42})");
  const std::string cfg = (dir / "c.json").string();
  REQUIRE(buoy_cli({"shots", "--config", cfg, "--out", dir.path.string()}).code == 0);
  REQUIRE(buoy_cli({"compensate", "--config", cfg, "--records", (dir / "shots.csv").string(), "--out",
                    dir.path.string()})
              .code == 0);
  const json c = json::parse(slurp(dir / "compensation.json"));
  CHECK(std::abs(c["y"]["stray_field_G"].get<double>() - 0.03) < 0.005);
  CHECK(std::abs(c["z"]["stray_field_G"].get<double>() + 0.01) < 0.005);
}

TEST_CASE("allan command") {
  TempDir dir;
  SUBCASE("constant input gives a zero curve") {
    std::string text = "value\n";
    for (int i = 0; i < 400; ++i) text += "1.5\n";
    spit(dir / "const.csv", text);
    REQUIRE(buoy_cli({"allan", "--records", (dir / "const.csv").string(), "--out", dir.path.string()}).code == 0);
    for (const auto& row : csv_rows(dir / "allan.csv")) CHECK(row[1] == 0.0);
  }
  SUBCASE("white noise slope and sinusoid floor") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.2);
    std::string white, wavy;
    for (int i = 0; i < 10000; ++i) {
      const double v = n(rng);
      white += std::to_string(v) + "\n";
      wavy += std::to_string(v + 0.05 * std::sin(2.0 * M_PI * i / 2000.0)) + "\n";
    }
    spit(dir / "white.csv", white);
    spit(dir / "wavy.csv", wavy);
    REQUIRE(buoy_cli({"allan", "--records", (dir / "white.csv").string(), "--out", dir.path.string()}).code == 0);
    const json w = json::parse(slurp(dir / "noise_floor.json"));
    CHECK(w["series"]["slope_1_100"].get<double>() == doctest::Approx(-0.5).epsilon(0.1));
    REQUIRE(buoy_cli({"allan", "--records", (dir / "wavy.csv").string(), "--out", dir.path.string()}).code == 0);
    const json s = json::parse(slurp(dir / "noise_floor.json"));
    CHECK(s["series"]["floor_px"].get<double>() > 2.0 * w["series"]["floor_px"].get<double>());
  }
  SUBCASE("shot records and errors") {
    spit(dir / "c.json", R"({"shots_per_condition": 400, "noise": {"center_rms_um": [2.12, 1.06]}})");
    const std::string cfg = (dir / "c.json").string();
    REQUIRE(buoy_cli({"shots", "--config", cfg, "--out", dir.path.string()}).code == 0);
    REQUIRE(buoy_cli({"allan", "--config", cfg, "--records", (dir / "shots.csv").string(), "--sizes", "1,2,4,8,16,32",
                      "--out", dir.path.string()})
                .code == 0);
    const json f = json::parse(slurp(dir / "noise_floor.json"));
    CHECK(f["y"]["samples"] == 400);
    CHECK(f["condition"]["polarity"] == 1);
    CHECK(csv_rows(dir / "allan_y.csv").size() == 6u);
    CHECK(csv_rows(dir / "allan_z.csv")[0][1] == doctest::Approx(0.2).epsilon(0.15));
    const Outcome too_big = buoy_cli({"allan", "--records", (dir / "shots.csv").string(), "--sizes", "300", "--out",
                                      dir.path.string()});
    CHECK(too_big.code == 1);
    CHECK(error_of(too_big)["error"] == "TooFewGroups");
    CHECK(buoy_cli({"allan", "--records", (dir / "shots.csv").string(), "--condition", "2", "--out",
                    dir.path.string()})
              .code == 1);
  }
}

TEST_CASE("sensitivity command") {
  TempDir dir;
  REQUIRE(buoy_cli({"sensitivity", "--out", dir.path.string()}).code == 0);
  const auto rows = csv_rows(dir / "sensitivity.csv");
  REQUIRE(rows.size() == 13u);
  CHECK(rows[6][0] == 0.0);
  CHECK(rows[6][1] == 0.0);
  CHECK(std::abs(rows.back()[1]) == doctest::Approx(0.5).epsilon(0.5));
  CHECK(std::abs(rows.front()[1]) == doctest::Approx(0.5).epsilon(0.5));
  REQUIRE(buoy_cli({"sensitivity", "--from", "-1e-6", "--to", "1e-6", "--steps", "3", "--out", dir.path.string()})
              .code == 0);
  for (const auto& row : csv_rows(dir / "sensitivity.csv")) CHECK(std::abs(row[2]) < 0.01);
}

TEST_CASE("outputs are byte identical across reruns and worker counts") {
  TempDir a, b;
  spit(a / "c.json", R"({"stray_field": {"homogeneous_G": [0, 0.01, 0]}, "bias_grid": {"iy": [-0.1, 0.1]},
      "shots_per_condition": 30})");
  const std::string cfg = (a / "c.json").string();
  REQUIRE(buoy_cli({"shots", "--config", cfg, "--workers", "1", "--seed", "9", "--out", a.path.string()}).code == 0);
  REQUIRE(buoy_cli({"shots", "--config", cfg, "--workers", "4", "--seed", "9", "--out", b.path.string()}).code == 0);
  CHECK(slurp(a / "shots.csv") == slurp(b / "shots.csv"));
  CHECK(slurp(a / "clusters.json") == slurp(b / "clusters.json"));
  const std::string before = slurp(a / "shots.csv");
  REQUIRE(buoy_cli({"shots", "--config", cfg, "--seed", "10", "--out", b.path.string()}).code == 0);
  CHECK(slurp(b / "shots.csv") != before);
}

TEST_CASE("BUOY_CONFIG is the configuration fallback") {
  TempDir dir;
  spit(dir / "c.json", R"({"quadrupole": {"strength_G_per_mm": 2.5}, "stray_field": {"homogeneous_G": [0.025, 0, 0]}})");
  ::setenv("BUOY_CONFIG", (dir / "c.json").c_str(), 1);
  const Outcome o = buoy_cli({"zero", "--out", dir.path.string()});
  ::unsetenv("BUOY_CONFIG");
  REQUIRE(o.code == 0);
  CHECK(json::parse(slurp(dir / "zero.json"))["analytic_r0_mm"][0].get<double>() == doctest::Approx(-0.01));
}

}  // namespace
}  // namespace buoy
