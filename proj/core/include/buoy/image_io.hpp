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

// File formats for camera frames, OD images and fit results.
//
//   frames:   binary PGM (P5), maxval 65535, big-endian 16-bit samples
//   OD image: raw little-endian float32, row-major, plus a JSON sidecar
//             {"width", "height", "pixel_size_um"}
//   fits:     one JSON object per GaussianFit

#pragma once

#include <filesystem>
#include <string>

#include "buoy/imaging.hpp"

namespace buoy {

void write_pgm(const std::filesystem::path& path, const Raster<std::uint16_t>& frame);
Raster<std::uint16_t> read_pgm(const std::filesystem::path& path);

void write_frames(const std::filesystem::path& directory, const std::string& stem, const FrameTriplet& frames);
FrameTriplet read_frames(const std::filesystem::path& directory, const std::string& stem);

/// Writes `<path>` (raw) and `<path>.json` (sidecar).
void write_od(const std::filesystem::path& path, const ODImage& image);
ODImage read_od(const std::filesystem::path& path);

std::string fit_to_json(const GaussianFit& fit);
GaussianFit fit_from_json(const std::string& text);

}  // namespace buoy
