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

// JSON form of coil assemblies:
//
//   {"members": [{"name": ..., "kind": "volume_coil" | "filament_loop" |
//                 "filament_polygon", ...shape fields...}],
//    "pair_links": [{"a": ..., "b": ..., "relative_sign": +-1, "name": ...}]}

#pragma once

#include <string>
#include <string_view>

#include "buoy/magnetostatics.hpp"

namespace buoy {

std::string assembly_to_json(const CoilAssembly& assembly);

/// Throws Error(ConfigError) on malformed documents and
/// Error(InvalidArgument) on invalid geometry.
CoilAssembly assembly_from_json(std::string_view text);

}  // namespace buoy
