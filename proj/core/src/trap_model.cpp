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

#include "buoy/trap_model.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "buoy/errors.hpp"

namespace buoy {
namespace {

constexpr double kTeslaPerGauss = 1e-4;
constexpr double kMeterPerMm = 1e-3;

void require_trap(const QuadrupoleParams& q) {
  if (q.strength == 0.0) throw Error(ErrorCode::ZeroQuadrupole, "quadrupole strength is zero");
}

std::string format_matrix(const Mat3& m) {
  std::ostringstream out;
  out << "[[" << m(0, 0) << ", " << m(0, 1) << ", " << m(0, 2) << "], [" << m(1, 0) << ", " << m(1, 1)
      << ", " << m(1, 2) << "], [" << m(2, 0) << ", " << m(2, 1) << ", " << m(2, 2) << "]]";
  return out.str();
}

}  // namespace

Vec3 FieldState::field_at(const Vec3& at) const {
  return quadrupole_field(quadrupole, at) + external.homogeneous + external.gradient * at;
}

Mat3 quadrupole_matrix(const QuadrupoleParams& q) {
  return Vec3(q.strength, q.strength, -2.0 * q.strength).asDiagonal();
}

Vec3 quadrupole_field(const QuadrupoleParams& q, const Vec3& at) {
  return {q.strength * at.x(), q.strength * at.y(), -2.0 * q.strength * at.z()};
}

Vec3 displaced_zero_homogeneous(const QuadrupoleParams& q, const Vec3& b_ext) {
  require_trap(q);
  return {-b_ext.x() / q.strength, -b_ext.y() / q.strength, b_ext.z() / (2.0 * q.strength)};
}

Vec3 displaced_zero_inhomogeneous(const QuadrupoleParams& q, const ExternalField& ext) {
  require_trap(q);
  const Mat3 total = quadrupole_matrix(q) + ext.gradient;
  const Eigen::JacobiSVD<Mat3> svd(total);
  const auto& sv = svd.singularValues();
  const double condition = sv(2) > 0.0 ? sv(0) / sv(2) : INFINITY;
  if (!(condition < 1e12)) {
    std::ostringstream msg;
    msg << "quadrupole plus external gradient is singular (condition " << condition
        << ", singular values " << sv(0) << ", " << sv(1) << ", " << sv(2)
        << "); matrix = " << format_matrix(total);
    throw Error(ErrorCode::SingularTrap, msg.str());
  }
  return -(total.partialPivLu().solve(ext.homogeneous));
}

void check_physical(const ExternalField& ext, double trace_tolerance) {
  const double trace = ext.gradient.trace();
  if (!(std::abs(trace) < trace_tolerance)) {
    std::ostringstream msg;
    msg << "external gradient has divergence " << trace << " G/mm";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  if (!ext.homogeneous.allFinite() || !ext.gradient.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "external field has non-finite components");
  }
}

double potential(const AtomSpecies& species, const FieldState& state, const Vec3& at,
                 bool include_gravity) {
  const double magnetic =
      kBohrMagneton * species.g_factor_product * state.field_at(at).norm() * kTeslaPerGauss;
  if (!include_gravity) return magnetic;
  return magnetic + species.mass * kStandardGravity * at.z() * kMeterPerMm;
}

double downhill_restoring_force(const AtomSpecies& species, const QuadrupoleParams& q) {
  // |B| grows as 2|Q| along z; G/mm -> T/m is a factor 0.1.
  const double axial_gradient_t_per_m = 2.0 * std::abs(q.strength) * kTeslaPerGauss / kMeterPerMm;
  return kBohrMagneton * species.g_factor_product * axial_gradient_t_per_m -
         species.mass * kStandardGravity;
}

NewtonResult find_zero_numerical(const VectorField& field, const Vec3& initial_guess,
                                 const NewtonOptions& options) {
  Vec3 r = initial_guess;
  Vec3 b = field(r);
  double residual = b.norm();
  const double h = options.jacobian_step;

  for (int iteration = 0; iteration <= options.max_iterations; ++iteration) {
    if (residual < options.tolerance) return {r, iteration, residual};
    if (iteration == options.max_iterations) break;

    Mat3 jac;
    for (int j = 0; j < 3; ++j) {
      const Vec3 e = h * Vec3::Unit(j);
      jac.col(j) = (field(r + e) - field(r - e)) / (2.0 * h);
    }
    const Eigen::JacobiSVD<Mat3> svd(jac);
    const auto& sv = svd.singularValues();
    if (!(sv(2) > 1e-14 * sv(0))) {
      throw Error(ErrorCode::SingularJacobian, "field Jacobian is singular near the iterate");
    }
    const Vec3 step = -jac.partialPivLu().solve(b);

    double scale = 1.0;
    Vec3 trial = r + step;
    Vec3 trial_b = field(trial);
    int halvings = 0;
    while (!(trial_b.norm() < residual)) {
      if (++halvings > 40) {
        std::ostringstream msg;
        msg << "line search stalled, residual " << residual << " G";
        throw Error(ErrorCode::NoConvergence, msg.str());
      }
      scale *= 0.5;
      trial = r + scale * step;
      trial_b = field(trial);
    }
    r = trial;
    b = trial_b;
    residual = b.norm();
  }
  std::ostringstream msg;
  msg << "no convergence after " << options.max_iterations << " iterations, residual " << residual
      << " G";
  throw Error(ErrorCode::NoConvergence, msg.str());
}

double current_sensitivity(const CoilAssembly& assembly, double nominal_current, double delta,
                           double asymmetry, const std::string& pair) {
  std::vector<PairLink> links;
  const PairLink* split = nullptr;
  for (const auto& link : assembly.links()) {
    if (link.logical_name == pair) {
      split = &link;
    } else {
      links.push_back(link);
    }
  }
  if (split == nullptr) throw Error(ErrorCode::UnknownCoil, "no coil pair named '" + pair + "'");

  const CoilAssembly separate(assembly.members(), links);
  const FieldModel model(separate);
  const std::string first = split->a;
  const std::string second = split->b;
  const double sign = split->relative_sign;

  auto zero_for = [&](double first_current, double second_current) {
    const Drive drive{{first, first_current}, {second, sign * second_current}};
    return find_zero_numerical([&](const Vec3& r) { return model.field(drive, r); }, Vec3::Zero())
        .root;
  };

  const Vec3 base = zero_for(nominal_current, nominal_current);
  const Vec3 moved = zero_for(nominal_current + delta * (1.0 + asymmetry / 2.0),
                              nominal_current + delta * (1.0 - asymmetry / 2.0));
  return (moved.z() - base.z()) * 1e3;
}

}  // namespace buoy
