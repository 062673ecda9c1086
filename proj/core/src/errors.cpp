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

#include "buoy/errors.hpp"

namespace buoy {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::OnConductor: return "OnConductor";
    case ErrorCode::UnknownCoil: return "UnknownCoil";
    case ErrorCode::ZeroQuadrupole: return "ZeroQuadrupole";
    case ErrorCode::SingularTrap: return "SingularTrap";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::UntrappedCloud: return "UntrappedCloud";
    case ErrorCode::DegenerateFrames: return "DegenerateFrames";
    case ErrorCode::FitDegenerate: return "FitDegenerate";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::MixedCondition: return "MixedCondition";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::ZeroSlope: return "ZeroSlope";
    case ErrorCode::ZeroAlpha: return "ZeroAlpha";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::TooFewEntries: return "TooFewEntries";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OnConductor:
    case ErrorCode::ZeroQuadrupole:
    case ErrorCode::SingularTrap:
    case ErrorCode::NoConvergence:
    case ErrorCode::SingularJacobian:
    case ErrorCode::UntrappedCloud:
    case ErrorCode::DegenerateFrames:
    case ErrorCode::FitDegenerate:
    case ErrorCode::ZeroSlope:
    case ErrorCode::ZeroAlpha:
      return true;
    default:
      return false;
  }
}

}  // namespace buoy
