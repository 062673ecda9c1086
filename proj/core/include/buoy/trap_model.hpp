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

// Quadrupole trap: ideal field, displaced zero, trapping potential, and a
// numerical zero finder for arbitrary (coil-generated) fields.

#pragma once

#include <functional>
#include <string>

#include "buoy/magnetostatics.hpp"

namespace buoy {

inline constexpr double kBohrMagneton = 9.2740100783e-24;  // J/T
inline constexpr double kBoltzmann = 1.380649e-23;         // J/K
inline constexpr double kStandardGravity = 9.80665;        // m/s^2
inline constexpr double kRubidium87Mass = 1.44316060e-25;  // kg

struct AtomSpecies {
  double mass = kRubidium87Mass;  // kg
  double g_factor_product = 1.0;  // g_F * m_F

  /// Rb-87 in F = 2, m_F = 2.
  static AtomSpecies rubidium87() { return {}; }
};

/// Signed transverse gradient Q in G/mm; the axial gradient is -2Q.
struct QuadrupoleParams {
  double strength = 0.0;

  int polarity() const { return strength > 0 ? 1 : (strength < 0 ? -1 : 0); }
};

/// External field B(r) = homogeneous + gradient * r, gradient(i, j) = dB_i/dx_j.
struct ExternalField {
  Vec3 homogeneous = Vec3::Zero();
  Mat3 gradient = Mat3::Zero();
};

struct FieldState {
  QuadrupoleParams quadrupole;
  ExternalField external;

  Vec3 field_at(const Vec3& at) const;
};

/// Q * diag(1, 1, -2).
Mat3 quadrupole_matrix(const QuadrupoleParams& q);

/// Q * (x, y, -2z).
Vec3 quadrupole_field(const QuadrupoleParams& q, const Vec3& at);

/// Zero of the quadrupole plus a homogeneous field:
/// (-Bx/Q, -By/Q, Bz/(2Q)). Throws ZeroQuadrupole if Q == 0.
Vec3 displaced_zero_homogeneous(const QuadrupoleParams& q, const Vec3& b_ext);

/// Zero of the quadrupole plus a linearly varying external field, i.e. the
/// r0 with (Qmat + G) r0 + B_ext(0) = 0. Throws SingularTrap if the matrix
/// is numerically singular (condition number >= 1e12).
Vec3 displaced_zero_inhomogeneous(const QuadrupoleParams& q, const ExternalField& ext);

/// Rejects gradients that are not divergence-free (|trace| >= tolerance).
void check_physical(const ExternalField& ext, double trace_tolerance = 1e-6);

/// Potential energy in J at `at` (mm). The gravity term is m g z with z in
/// meters relative to the origin.
double potential(const AtomSpecies& species, const FieldState& state, const Vec3& at,
                 bool include_gravity);

/// 2 mu_B g |Q| - m g: the net restoring force (N) below the trap zero.
/// Positive means gravity cannot pull the cloud out.
double downhill_restoring_force(const AtomSpecies& species, const QuadrupoleParams& q);

struct NewtonOptions {
  double tolerance = 1e-9;  // G, on |B|
  int max_iterations = 100;
  double jacobian_step = 1e-4;  // mm
};

struct NewtonResult {
  Vec3 root = Vec3::Zero();
  int iterations = 0;
  double residual = 0.0;  // |B(root)| in G
};

using VectorField = std::function<Vec3(const Vec3&)>;

/// Damped Newton iteration on B(r) = 0 with a central-difference Jacobian.
/// Throws NoConvergence (message carries the final residual) or
/// SingularJacobian.
NewtonResult find_zero_numerical(const VectorField& field, const Vec3& initial_guess,
                                 const NewtonOptions& options = {});

/// How a common-mode current change reaches the two coils of a pair: the
/// first coil sees delta * (1 + asymmetry/2), the second delta * (1 - asymmetry/2).
inline constexpr double kDefaultCommonModeAsymmetry = 0.5;

/// Axial shift in micrometers of the numerically found trap zero when the
/// current of the `pair` link moves from `nominal_current` to
/// `nominal_current + delta`. Other logical currents are held at zero.
double current_sensitivity(const CoilAssembly& assembly, double nominal_current, double delta,
                           double asymmetry = kDefaultCommonModeAsymmetry,
                           const std::string& pair = reference_names::kMot);

}  // namespace buoy
