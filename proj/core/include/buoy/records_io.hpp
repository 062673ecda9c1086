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

// CSV forms of shot records, position series, and Allan curves.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "buoy/protocol.hpp"
#include "buoy/stats.hpp"

namespace buoy {

inline constexpr const char* kShotCsvHeader = "shot_id,Ix,Iy,Iz,polarity,y_px,z_px,qc,seed";

void write_shot_csv(std::ostream& out, const std::vector<ShotRecord>& records);
std::vector<ShotRecord> read_shot_csv(std::istream& in);

/// Reads a one-column CSV of numbers; a non-numeric first line is taken as
/// a header.
std::vector<double> read_series_csv(std::istream& in);

/// Writes `n,sigma_px,n_groups,white_noise_px`, the last column being the
/// n^-1/2 extrapolation of the n = 1 entry (empty if the curve has none).
void write_allan_csv(std::ostream& out, const AllanCurve& curve);

/// True if the first line of `in` is the shot-record header. Does not consume.
bool looks_like_shot_csv(std::istream& in);

}  // namespace buoy
