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
#include <random>

#include "doctest.h"

#include "buoy/magnetostatics.hpp"
#include "buoy/trap_model.hpp"
#include "test_support.hpp"

namespace buoy {
namespace {

using testing::max_abs_diff;

// Cramer's rule, written out so it shares nothing with the library solve.
Vec3 solve3(const Mat3& m, const Vec3& b) {
  auto det = [](const Mat3& a) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  };
  const double d = det(m);
  Vec3 x;
  for (int c = 0; c < 3; ++c) {
    Mat3 mc = m;
    mc.col(c) = b;
    x[c] = det(mc) / d;
  }
  return x;
}

TEST_CASE("quadrupole field closed form") {
  const QuadrupoleParams q{2.5};
  CHECK(quadrupole_field(q, Vec3::Zero()).norm() == 0.0);
  CHECK(max_abs_diff(quadrupole_field(q, Vec3(0.01, 0, 0)), Vec3(0.025, 0, 0)) < 1e-15);
  CHECK(max_abs_diff(quadrupole_field(q, Vec3(0.1, -0.2, 0.3)), Vec3(0.25, -0.5, -1.5)) < 1e-15);
  CHECK(max_abs_diff(quadrupole_field({-2.5}, Vec3(0.1, -0.2, 0.3)), -quadrupole_field(q, Vec3(0.1, -0.2, 0.3))) ==
        0.0);
  CHECK(quadrupole_matrix(q).trace() == 0.0);
  CHECK(q.polarity() == 1);
  CHECK(QuadrupoleParams{-1.0}.polarity() == -1);
}

TEST_CASE("homogeneous displaced zero") {
  const QuadrupoleParams q{2.5};
  CHECK(displaced_zero_homogeneous(q, Vec3::Zero()).norm() == 0.0);
  CHECK(max_abs_diff(displaced_zero_homogeneous(q, Vec3(0, 0.025, 0)), Vec3(0, -0.010, 0)) < 1e-15);
  CHECK(max_abs_diff(displaced_zero_homogeneous(q, Vec3(0.1, 0.2, 0.3)), Vec3(-0.04, -0.08, 0.06)) < 1e-15);
  CHECK(testing::error_code_of([] { displaced_zero_homogeneous({0.0}, Vec3::UnitX()); }) ==
        ErrorCode::ZeroQuadrupole);
}

TEST_CASE("Eq3 cancellation, antisymmetry and decoupling on random cases") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> qd(0.5, 10.0), bd(-0.1, 0.1), sign(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const QuadrupoleParams q{qd(rng) * (sign(rng) < 0 ? -1.0 : 1.0)};
    const Vec3 b(bd(rng), bd(rng), bd(rng));
    const Vec3 r0 = displaced_zero_homogeneous(q, b);
    CHECK((quadrupole_field(q, r0) + b).norm() < 1e-12);
    CHECK(max_abs_diff(displaced_zero_homogeneous({-q.strength}, b), -r0) < 1e-12);
    const Vec3 r1 = displaced_zero_homogeneous(q, b + Vec3(0, 0.01, 0));
    CHECK(r1.x() == r0.x());
    CHECK(r1.z() == r0.z());
    CHECK(r1.y() != r0.y());
  }
}

TEST_CASE("inhomogeneous zero against a dense linear solve") {
  const QuadrupoleParams q{2.5};
  ExternalField ext;
  ext.homogeneous = Vec3(0, 0.025, 0);
  ext.gradient(1, 2) = ext.gradient(2, 1) = 0.5;
  const Vec3 r0 = displaced_zero_inhomogeneous(q, ext);
  Mat3 m = Mat3::Zero();
  m.diagonal() << 2.5, 2.5, -5.0;
  m(1, 2) = m(2, 1) = 0.5;
  const Vec3 oracle = solve3(m, -ext.homogeneous);
  CHECK(max_abs_diff(r0, oracle) < 1e-15);
  CHECK(((m * r0) + ext.homogeneous).norm() < 1e-15);
  // Polarity reversal no longer simply flips the sign.
  const Vec3 flipped = displaced_zero_inhomogeneous({-2.5}, ext);
  CHECK(max_abs_diff(flipped, -r0) > 1e-6);
}

TEST_CASE("inhomogeneous zero reduces to the homogeneous formula") {
  const QuadrupoleParams q{-1.7};
  ExternalField ext;
  ext.homogeneous = Vec3(0.02, -0.01, 0.03);
  CHECK(max_abs_diff(displaced_zero_inhomogeneous(q, ext), displaced_zero_homogeneous(q, ext.homogeneous)) <
        1e-15);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat3 g;
  for (int i = 0; i < 9; ++i) g(i) = n(rng);
  ext.gradient = 1e-8 * g / g.norm();
  CHECK(max_abs_diff(displaced_zero_inhomogeneous(q, ext), displaced_zero_homogeneous(q, ext.homogeneous)) <
        1e-6);
}

TEST_CASE("singular trap matrix is reported") {
  const QuadrupoleParams q{2.5};
  ExternalField ext;
  ext.homogeneous = Vec3(0, 0.025, 0);
  ext.gradient = -quadrupole_matrix(q);
  ext.gradient(0, 0) = -2.5 + 1e-3;  // the y and z directions cancel exactly
  try {
    displaced_zero_inhomogeneous(q, ext);
    FAIL("expected SingularTrap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularTrap);
    CHECK(std::string(e.what()).find("singular values") != std::string::npos);
  }
}

TEST_CASE("physicality check on the external gradient") {
  ExternalField ext;
  ext.gradient(0, 0) = 1e-3;
  CHECK(testing::error_code_of([&] { check_physical(ext); }) == ErrorCode::InvalidArgument);
  CHECK_NOTHROW(check_physical(ext, 1e-2));
  ext.gradient(1, 1) = -1e-3;
  CHECK_NOTHROW(check_physical(ext));
}

TEST_CASE("potential") {
  const AtomSpecies rb = AtomSpecies::rubidium87();
  FieldState state{{2.5}, {}};
  state.external.homogeneous = Vec3(0.01, -0.02, 0.005);
  const Vec3 r0 = displaced_zero_homogeneous(state.quadrupole, state.external.homogeneous);
  CHECK(potential(rb, state, r0, false) < 1e-40);

  FieldState flipped = state;
  flipped.quadrupole.strength = -2.5;
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const Vec3 at = testing::random_point(rng, 0.5);
    // |B| is polarity independent only without external field.
    FieldState a{{2.5}, {}}, b{{-2.5}, {}};
    CHECK(potential(rb, a, at, true) == doctest::Approx(potential(rb, b, at, true)).epsilon(1e-15));
    CHECK(potential(rb, state, at, false) >= 0.0);
  }

  // mu_B |B| with |B| = 1 G = 1e-4 T.
  FieldState uniform{{1.0}, {}};
  uniform.external.homogeneous = Vec3(1.0, 0, 0);
  CHECK(potential(rb, uniform, Vec3::Zero(), false) == doctest::Approx(kBohrMagneton * 1e-4).epsilon(1e-14));
  CHECK(potential(rb, FieldState{{2.5}, {}}, Vec3(0, 0, 1.0), true) -
            potential(rb, FieldState{{2.5}, {}}, Vec3(0, 0, 1.0), false) ==
        doctest::Approx(kRubidium87Mass * kStandardGravity * 1e-3).epsilon(1e-12));
}

TEST_CASE("gravity does not move the potential minimum for the default trap") {
  const AtomSpecies rb = AtomSpecies::rubidium87();
  const QuadrupoleParams q{2.5};
  const double slope = downhill_restoring_force(rb, q);
  CHECK(slope == doctest::Approx(2.0 * 9.2740100783e-24 * 0.25 - 1.44316060e-25 * 9.80665).epsilon(1e-14));
  CHECK(slope > 0.0);
  FieldState state{q, {}};
  state.external.homogeneous = Vec3(0, 0.02, -0.01);
  const Vec3 r0 = displaced_zero_homogeneous(q, state.external.homogeneous);
  const double u0 = potential(rb, state, r0, true);
  for (const Vec3& d : {Vec3(0, 0, 1e-3), Vec3(0, 0, -1e-3), Vec3(1e-3, 0, 0), Vec3(0, -1e-3, 0)}) {
    CHECK(potential(rb, state, r0 + d, true) > u0);
  }
  // A trap too weak to hold against gravity.
  CHECK(downhill_restoring_force(rb, {0.01}) < 0.0);
}

TEST_CASE("Newton converges on the ideal quadrupole") {
  const QuadrupoleParams q{2.5};
  const Vec3 b(0.01, -0.03, 0.02);
  const auto field = [&](const Vec3& r) { return quadrupole_field(q, r) + b; };
  const Vec3 analytic = displaced_zero_homogeneous(q, b);
  const NewtonResult from_analytic = find_zero_numerical(field, analytic);
  CHECK(from_analytic.iterations <= 2);
  CHECK(max_abs_diff(from_analytic.root, analytic) < 1e-9);
  const NewtonResult from_far = find_zero_numerical(field, analytic + Vec3(0.5, -0.3, 0.2));
  CHECK(max_abs_diff(from_far.root, analytic) < 1e-9);
  CHECK(from_far.residual < 1e-9);
}

TEST_CASE("Newton agrees with Eq3 on 100 random ideal cases") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> qd(1.0, 5.0), bd(-0.05, 0.05);
  for (int k = 0; k < 100; ++k) {
    const QuadrupoleParams q{(k % 2 ? -1.0 : 1.0) * qd(rng)};
    const Vec3 b(bd(rng), bd(rng), bd(rng));
    const auto field = [&](const Vec3& r) { return quadrupole_field(q, r) + b; };
    const NewtonResult result = find_zero_numerical(field, Vec3::Zero());
    CHECK(max_abs_diff(result.root, displaced_zero_homogeneous(q, b)) < 1e-9);
  }
}

TEST_CASE("Newton failure modes") {
  const auto constant = [](const Vec3&) { return Vec3(1, 0, 0); };
  CHECK(testing::error_code_of([&] { find_zero_numerical(constant, Vec3::Zero()); }) ==
        ErrorCode::SingularJacobian);
  // |B| has no zero: x^2 + 1 along x, identity elsewhere.
  const auto no_root = [](const Vec3& r) { return Vec3(r.x() * r.x() + 1.0, r.y(), r.z()); };
  const ErrorCode code = testing::error_code_of([&] { find_zero_numerical(no_root, Vec3(0.3, 0, 0)); });
  CHECK((code == ErrorCode::NoConvergence || code == ErrorCode::SingularJacobian));
}

TEST_CASE("Newton on the exact coil field") {
  const FieldModel model(reference_assembly());
  const Drive drive{{"mot", kNominalMotCurrent}};
  const Mat3 j = model.gradient(drive, Vec3::Zero());
  const QuadrupoleParams q{j(0, 0)};

  SUBCASE("no external field, guess 0.5 mm off center") {
    const auto field = [&](const Vec3& r) { return model.field(drive, r); };
    const NewtonResult result = find_zero_numerical(field, Vec3(0.3, -0.3, 0.25));
    CHECK(result.root.norm() < 1e-9);
  }
  SUBCASE("25 mG transverse offset") {
    const Vec3 b(0, 0.025, 0);
    const auto field = [&](const Vec3& r) { return model.field(drive, r) + b; };
    const Vec3 analytic = displaced_zero_homogeneous(q, b);
    const NewtonResult result = find_zero_numerical(field, Vec3::Zero());
    CHECK((result.root - analytic).norm() < 0.01 * analytic.norm());
    CHECK((result.root - analytic).norm() < 1e-4);  // 0.1 um
  }
}

TEST_CASE("current sensitivity of the MOT pair") {
  const CoilAssembly a = reference_assembly();
  CHECK(current_sensitivity(a, kNominalMotCurrent, 0.0) == 0.0);
  const double up = current_sensitivity(a, kNominalMotCurrent, 3e-4);
  const double down = current_sensitivity(a, kNominalMotCurrent, -3e-4);
  CHECK(std::abs(up) == doctest::Approx(0.5).epsilon(0.5));
  CHECK(down == doctest::Approx(-up).epsilon(1e-2));
  const double tiny = current_sensitivity(a, kNominalMotCurrent, 1e-6);
  CHECK(std::abs(tiny) < 0.01 * 5.3);
  // No asymmetry: a common-mode change only rescales the quadrupole.
  CHECK(std::abs(current_sensitivity(a, kNominalMotCurrent, 3e-4, 0.0)) < 1e-6);
  CHECK(testing::error_code_of([&] { current_sensitivity(a, kNominalMotCurrent, 1e-4, 0.5, "comp_q"); }) ==
        ErrorCode::UnknownCoil);
}

}  // namespace
}  // namespace buoy
