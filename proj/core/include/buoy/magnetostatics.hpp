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

// Static magnetic fields of filamentary and volume coils.
//
// Units throughout: lengths in mm, currents in A, fields in Gauss,
// gradients in G/mm. With these units mu0/(4*pi) is exactly 1 G*mm/A.

#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace buoy {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// mu0 / (4 pi) in G*mm/A.
inline constexpr double kMu0Over4Pi = 1.0;

inline constexpr int kDefaultSegmentsPerLoop = 720;

/// Circular single-filament loop.
struct FilamentLoop {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 1.0;
  double current = 0.0;  // A per turn
  int turns = 1;
};

/// Closed polygonal filament; the last vertex connects back to the first.
struct FilamentPolygon {
  std::vector<Vec3> vertices;
  double current = 0.0;
  int turns = 1;
};

/// Solenoidal winding pack coaxial with the z axis, rectangular cross-section.
struct VolumeCoil {
  double inner_radius = 1.0;
  double radial_build = 0.0;
  double axial_thickness = 0.0;
  double axial_center = 0.0;  // signed z position of the pack center
  int turns = 1;
  int n_radial = 8;
  int n_axial = 5;
  double current = 0.0;
};

using CoilShape = std::variant<VolumeCoil, FilamentLoop, FilamentPolygon>;

struct CoilMember {
  std::string name;
  CoilShape shape;
};

/// Ties two members to one logical current. Member `b` carries
/// `relative_sign` times the current of member `a`.
struct PairLink {
  std::string a;
  std::string b;
  int relative_sign = 1;
  std::string logical_name;  // empty means `a`
};

/// Logical current name -> drive current in A.
using Drive = std::map<std::string, double>;

class CoilAssembly {
 public:
  CoilAssembly() = default;
  /// Throws Error(InvalidArgument) on duplicate names, dangling or
  /// overlapping links, or invalid member geometry.
  CoilAssembly(std::vector<CoilMember> members, std::vector<PairLink> links);

  const std::vector<CoilMember>& members() const { return members_; }
  const std::vector<PairLink>& links() const { return links_; }

  /// Names of the independently drivable currents, in member order.
  std::vector<std::string> logical_currents() const;

  /// Logical current that drives `member` and the sign it enters with.
  std::pair<std::string, int> driver_of(const std::string& member) const;

  /// Nominal drive taken from the members' own current fields.
  Drive nominal_drive() const;

  const CoilMember& member(const std::string& name) const;
  bool has_member(const std::string& name) const;

 private:
  std::vector<CoilMember> members_;
  std::vector<PairLink> links_;
};

/// Exact field of a finite straight current segment from p0 to p1.
/// Throws OnConductor if `at` lies within 1e-9 mm of the segment.
Vec3 field_of_segment(const Vec3& p0, const Vec3& p1, double current, const Vec3& at);

/// Regular polygon approximating a circular loop. The vertex radius is
/// chosen so that the enclosed area (and hence the dipole moment) matches
/// the circle.
std::vector<Vec3> loop_vertices(const FilamentLoop& loop, int segments);

/// Expands a winding pack into a grid of filament loops with the same
/// total ampere-turns.
std::vector<FilamentLoop> expand(const VolumeCoil& coil);

Vec3 field_of_loop(const FilamentLoop& loop, const Vec3& at, int segments = kDefaultSegmentsPerLoop);
Vec3 field_of_polygon(const FilamentPolygon& polygon, const Vec3& at);

/// Precomputed segment lists of an assembly, grouped by logical current.
/// Evaluation is a pure function of (drive, point) and thread-safe.
class FieldModel {
 public:
  explicit FieldModel(const CoilAssembly& assembly, int segments_per_loop = kDefaultSegmentsPerLoop);

  /// Field for the given drive. Logical currents absent from `drive`
  /// contribute nothing. Throws UnknownCoil for unmatched drive names.
  Vec3 field(const Drive& drive, const Vec3& at) const;

  /// Field per ampere of a single logical current.
  Vec3 unit_field(const std::string& logical, const Vec3& at) const;

  /// Jacobian J(i, j) = dB_i/dx_j by central differences.
  Mat3 gradient(const Drive& drive, const Vec3& at, double step = 1e-3) const;

  const std::vector<std::string>& logical_currents() const { return names_; }

 private:
  struct Segment {
    Vec3 p0;
    Vec3 p1;
    double weight;  // signed ampere-turns per ampere of drive
  };
  std::vector<std::string> names_;
  std::vector<std::vector<Segment>> segments_;

  std::size_t index_of(const std::string& logical) const;
};

Vec3 field_of_assembly(const CoilAssembly& assembly, const Drive& drive, const Vec3& at,
                       int segments_per_loop = kDefaultSegmentsPerLoop);

/// Throws InvalidArgument if step <= 0.
Mat3 gradient_matrix(const CoilAssembly& assembly, const Drive& drive, const Vec3& at,
                     double step = 1e-3, int segments_per_loop = kDefaultSegmentsPerLoop);

// ---------------------------------------------------------------------------
// Reference apparatus

struct ReferenceGeometry {
  double coil_inner_radius = 32.0;
  double coil_radial_build = 16.0;
  double coil_axial_thickness = 10.0;
  double mot_inner_separation = 34.0;
  double motplus_inner_separation = 74.0;
  int mot_turns = 157;
  int motplus_turns = 157;
  double compensation_side = 400.0;
  double compensation_separation = 500.0;
  int compensation_turns = 30;
};

inline constexpr double kNominalMotCurrent = 4.7;       // A
inline constexpr double kTargetQuadrupoleGradient = 2.5; // G/mm, transverse

/// Logical current names of the reference assembly.
namespace reference_names {
inline constexpr const char* kMot = "mot";
inline constexpr const char* kMotPlus = "motplus";
inline constexpr const char* kCompX = "comp_x";
inline constexpr const char* kCompY = "comp_y";
}  // namespace reference_names

/// MOT pair (anti-driven, positive drive gives Q > 0), MOT+ pair
/// (co-driven, z bias), and square compensation pairs on x and y.
CoilAssembly reference_assembly(const ReferenceGeometry& geometry = {});

/// Real-valued MOT turn count giving the target transverse gradient at
/// the nominal current. The reference geometry stores its rounded value.
double calibrate_mot_turns(const ReferenceGeometry& geometry = {},
                           double nominal_current = kNominalMotCurrent,
                           double target_gradient = kTargetQuadrupoleGradient);

}  // namespace buoy
