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

// Locale-independent number formatting for reproducible text output.

#pragma once

#include <string>

namespace buoy {

inline constexpr int kOutputSignificantDigits = 9;

/// Shortest general-format text with at most `digits` significant digits.
std::string format_number(double value, int digits = kOutputSignificantDigits);

/// The double nearest to `value` rounded to `digits` significant digits.
double round_significant(double value, int digits = kOutputSignificantDigits);

}  // namespace buoy
