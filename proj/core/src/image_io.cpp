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

#include "buoy/image_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "buoy/errors.hpp"
#include "buoy/format.hpp"

namespace buoy {
namespace {

using nlohmann::json;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

// Next whitespace-delimited PGM header token, skipping comments.
std::string header_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(char(c));
  }
  return token;
}

json vec2_json(const Vec2& v) { return json::array({round_significant(v.x()), round_significant(v.y())}); }

json number(double v) {
  if (std::isfinite(v)) return round_significant(v);
  return format_number(v);  // JSON has no inf/nan
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return NAN;
  }
  return j.get<double>();
}

Vec2 vec2_from(const json& j) { return {number_from(j.at(0)), number_from(j.at(1))}; }

}  // namespace

void write_pgm(const std::filesystem::path& path, const Raster<std::uint16_t>& frame) {
  auto out = open_out(path);
  out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
  std::vector<unsigned char> bytes(frame.data.size() * 2);
  for (std::size_t i = 0; i < frame.data.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(frame.data[i] >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(frame.data[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

Raster<std::uint16_t> read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in) != "P5") throw Error(ErrorCode::IoError, path.string() + ": not a binary PGM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(header_token(in));
    height = std::stoi(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoError, path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval < 256 || maxval > 65535) {
    throw Error(ErrorCode::IoError, path.string() + ": expected a 16-bit PGM");
  }
  Raster<std::uint16_t> frame(width, height);
  std::vector<unsigned char> bytes(frame.data.size() * 2);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
  if (in.gcount() != std::streamsize(bytes.size())) throw Error(ErrorCode::IoError, path.string() + ": truncated PGM");
  for (std::size_t i = 0; i < frame.data.size(); ++i) {
    frame.data[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
  }
  return frame;
}

void write_frames(const std::filesystem::path& directory, const std::string& stem, const FrameTriplet& frames) {
  write_pgm(directory / (stem + "_atom.pgm"), frames.atom);
  write_pgm(directory / (stem + "_reference.pgm"), frames.reference);
  write_pgm(directory / (stem + "_dark.pgm"), frames.dark);
}

FrameTriplet read_frames(const std::filesystem::path& directory, const std::string& stem) {
  return {read_pgm(directory / (stem + "_atom.pgm")), read_pgm(directory / (stem + "_reference.pgm")),
          read_pgm(directory / (stem + "_dark.pgm"))};
}

void write_od(const std::filesystem::path& path, const ODImage& image) {
  {
    auto out = open_out(path);
    std::vector<unsigned char> bytes(image.od.data.size() * 4);
    for (std::size_t i = 0; i < image.od.data.size(); ++i) {
      auto bits = std::bit_cast<std::uint32_t>(image.od.data[i]);
      for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  }
  json sidecar{{"width", image.od.width}, {"height", image.od.height},
               {"pixel_size_um", image.geometry.pixel_size_um}};
  auto out = open_out(path.string() + ".json");
  out << sidecar.dump(2) << "\n";
}

ODImage read_od(const std::filesystem::path& path) {
  json sidecar;
  try {
    auto meta = open_in(path.string() + ".json");
    sidecar = json::parse(meta);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ".json: " + e.what());
  }
  ODImage image;
  image.geometry.width = sidecar.at("width").get<int>();
  image.geometry.height = sidecar.at("height").get<int>();
  image.geometry.pixel_size_um = sidecar.value("pixel_size_um", 5.3);
  image.od = Raster<float>(image.geometry.width, image.geometry.height);
  auto in = open_in(path);
  std::vector<unsigned char> bytes(image.od.data.size() * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
  if (in.gcount() != std::streamsize(bytes.size())) throw Error(ErrorCode::IoError, path.string() + ": truncated raster");
  for (std::size_t i = 0; i < image.od.data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[4 * i + b]) << (8 * b);
    image.od.data[i] = std::bit_cast<float>(bits);
  }
  return image;
}

std::string fit_to_json(const GaussianFit& fit) {
  json j{{"center_px", vec2_json(fit.center)},
         {"widths_px", vec2_json(fit.widths)},
         {"amplitude", number(fit.amplitude)},
         {"offset", number(fit.offset)},
         {"center_uncertainty_px", json::array({number(fit.center_uncertainty.x()), number(fit.center_uncertainty.y())})},
         {"residual_skewness", json::array({number(fit.residual_skewness.x()), number(fit.residual_skewness.y())})},
         {"snr", number(fit.snr)},
         {"converged", fit.converged},
         {"iterations", fit.iterations}};
  return j.dump(2);
}

GaussianFit fit_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    GaussianFit fit;
    fit.center = vec2_from(j.at("center_px"));
    fit.widths = vec2_from(j.at("widths_px"));
    fit.amplitude = number_from(j.at("amplitude"));
    fit.offset = number_from(j.at("offset"));
    fit.center_uncertainty = vec2_from(j.at("center_uncertainty_px"));
    fit.residual_skewness = vec2_from(j.at("residual_skewness"));
    fit.snr = number_from(j.at("snr"));
    fit.converged = j.at("converged").get<bool>();
    fit.iterations = j.value("iterations", 0);
    return fit;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed fit record: ") + e.what());
  }
}

}  // namespace buoy
