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

#include <cstdlib>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "buoy/cli/commands.hpp"
#include "buoy/errors.hpp"

namespace buoy::cli {
namespace {

namespace fs = std::filesystem;

void report(std::ostream& err, const std::string& code, const std::string& message) {
  err << nlohmann::ordered_json{{"error", code}, {"message", message}}.dump() << "\n";
}

Drive parse_drive(const std::vector<std::string>& items) {
  Drive drive;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::InvalidArgument, "drive entries look like name=amps, got '" + item + "'");
    }
    std::size_t used = 0;
    double amps = 0.0;
    try {
      amps = std::stod(item.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() - eq - 1) {
      throw Error(ErrorCode::InvalidArgument, "drive current in '" + item + "' is not a number");
    }
    drive[item.substr(0, eq)] = amps;
  }
  return drive;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Magnetic trap zero simulation and polarity-reversal field analysis"};
  app.name("buoy");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  fs::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string mode;
  app.add_option("--config", config_path, "Experiment configuration JSON (fallback: $BUOY_CONFIG)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Base seed, overrides the configuration");
  app.add_option("--workers", workers, "Worker threads for shot simulation")->check(CLI::PositiveNumber);
  app.add_option("--mode", mode, "Shot mode, overrides the configuration")->check(CLI::IsMember({"fast", "full"}));

  FieldLine line;
  std::string axis = "x";
  std::vector<std::string> drive_items;
  auto* field = app.add_subcommand("field", "Exact and ideal-quadrupole field along a line (CSV)");
  field->add_option("--axis", axis, "Line direction")->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
  field->add_option("--from", line.from_mm, "Line start, mm")->capture_default_str();
  field->add_option("--to", line.to_mm, "Line end, mm")->capture_default_str();
  field->add_option("--samples", line.samples, "Number of points")->capture_default_str();
  field->add_option("--drive", drive_items, "Logical current override name=amps (repeatable)");

  auto* zero = app.add_subcommand("zero", "Analytic and numerical trap zero (JSON)");

  auto* shots = app.add_subcommand("shots", "Simulate a polarity-reversal campaign (CSV + JSON)");

  fs::path records;
  auto* compensate = app.add_subcommand("compensate", "Compensation currents from a shot-record CSV");
  compensate->add_option("--records", records, "Shot-record CSV")->required();

  fs::path allan_records;
  std::vector<int> sizes;
  auto* allan = app.add_subcommand("allan", "Non-overlapping Allan deviation of cloud positions");
  allan->add_option("--records", allan_records, "Shot-record CSV or one-column series")->required();
  allan->add_option("--sizes", sizes, "Ensemble sizes, comma separated")->delimiter(',');
  std::size_t condition = 0;
  allan->add_option("--condition", condition, "Index of the (bias, polarity) condition, in order of appearance")
      ->capture_default_str();

  SensitivitySweep sweep;
  auto* sensitivity = app.add_subcommand("sensitivity", "Axial zero shift under common-mode current changes");
  sensitivity->add_option("--from", sweep.from_A, "Smallest current change, A")->capture_default_str();
  sensitivity->add_option("--to", sweep.to_A, "Largest current change, A")->capture_default_str();
  sensitivity->add_option("--steps", sweep.steps, "Number of points")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    report(err, "UsageError", e.what());
    return 1;
  }

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("BUOY_CONFIG"); env != nullptr) config_path = env;
    }
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) config.base_seed = *seed;
    if (!mode.empty()) config.mode = shot_mode_from_string(mode);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + out_dir.string());

    Paths written;
    if (field->parsed()) {
      line.axis = axis[0] - 'x';
      line.drive = parse_drive(drive_items);
      written = cmd_field(config, line, out_dir);
    } else if (zero->parsed()) {
      written = cmd_zero(config, out_dir);
    } else if (shots->parsed()) {
      written = cmd_shots(config, workers, out_dir, err);
    } else if (compensate->parsed()) {
      written = cmd_compensate(config, records, out_dir);
    } else if (allan->parsed()) {
      written = cmd_allan(config, allan_records, sizes, condition, out_dir);
    } else if (sensitivity->parsed()) {
      written = cmd_sensitivity(config, sweep, out_dir);
    }
    for (const auto& p : written) out << p.string() << "\n";
    return 0;
  } catch (const Error& e) {
    report(err, to_string(e.code()), e.what());
    return is_numerical(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    report(err, "InvalidArgument", e.what());
    return 1;
  }
}

}  // namespace buoy::cli
