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

#include "buoy/magnetostatics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Geometry>

#include "buoy/errors.hpp"

namespace buoy {
namespace {

constexpr double kOnConductorTolerance = 1e-9;  // mm

// Field per ampere of a straight segment (Hanson & Hirshman form).
Vec3 segment_kernel(const Vec3& p0, const Vec3& p1, const Vec3& at) {
  const Vec3 along = p1 - p0;
  const double length2 = along.squaredNorm();
  if (length2 == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "segment endpoints coincide");
  }
  const Vec3 r1 = at - p0;
  const Vec3 r2 = at - p1;
  const double t = std::clamp(r1.dot(along) / length2, 0.0, 1.0);
  if ((r1 - t * along).norm() < kOnConductorTolerance) {
    throw Error(ErrorCode::OnConductor, "evaluation point lies on a current segment");
  }
  const double n1 = r1.norm();
  const double n2 = r2.norm();
  // r1 x r2 == along x r1, without the cancellation between r1 and r2.
  const Vec3 c = along.cross(r1);
  const double dot = r1.dot(r2);
  // n1 n2 + r1.r2 cancels when the segment is long compared with the
  // distance; (n1 n2)^2 - (r1.r2)^2 = |c|^2 gives the same value stably.
  const double sum = dot >= 0.0 ? n1 * n2 + dot : c.squaredNorm() / (n1 * n2 - dot);
  return (kMu0Over4Pi * (n1 + n2) / (n1 * n2 * sum)) * c;
}

// Orthonormal (u, v) with u x v = normal.
std::pair<Vec3, Vec3> transverse_basis(const Vec3& normal) {
  const Vec3 seed = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = (seed - seed.dot(normal) * normal).normalized();
  return {u, normal.cross(u)};
}

void validate(const FilamentLoop& loop, const std::string& name) {
  if (!(loop.radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, name + ": loop radius must be positive");
  }
  if (std::abs(loop.normal.norm() - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, name + ": loop normal must be a unit vector");
  }
  if (loop.turns < 1) throw Error(ErrorCode::InvalidArgument, name + ": turns must be >= 1");
}

void validate(const FilamentPolygon& polygon, const std::string& name) {
  const auto& v = polygon.vertices;
  if (v.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, name + ": polygon needs at least 3 vertices");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == v[(i + 1) % v.size()]) {
      throw Error(ErrorCode::InvalidArgument, name + ": consecutive polygon vertices coincide");
    }
  }
  if (polygon.turns < 1) throw Error(ErrorCode::InvalidArgument, name + ": turns must be >= 1");
}

void validate(const VolumeCoil& coil, const std::string& name) {
  if (!(coil.inner_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, name + ": inner radius must be positive");
  }
  if (coil.radial_build < 0.0 || coil.axial_thickness < 0.0) {
    throw Error(ErrorCode::InvalidArgument, name + ": negative winding-pack extent");
  }
  if (coil.turns < 1 || coil.n_radial < 1 || coil.n_axial < 1) {
    throw Error(ErrorCode::InvalidArgument, name + ": turns and filament grid must be >= 1");
  }
}

double nominal_current(const CoilShape& shape) {
  return std::visit([](const auto& s) { return s.current; }, shape);
}

}  // namespace

CoilAssembly::CoilAssembly(std::vector<CoilMember> members, std::vector<PairLink> links)
    : members_(std::move(members)), links_(std::move(links)) {
  std::set<std::string> names;
  for (const auto& m : members_) {
    if (m.name.empty()) throw Error(ErrorCode::InvalidArgument, "coil member without a name");
    if (!names.insert(m.name).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate coil name '" + m.name + "'");
    }
    std::visit([&](const auto& s) { validate(s, m.name); }, m.shape);
  }
  std::set<std::string> linked;
  std::set<std::string> logical;
  for (auto& link : links_) {
    for (const auto* end : {&link.a, &link.b}) {
      if (!names.count(*end)) {
        throw Error(ErrorCode::InvalidArgument, "pair link references unknown coil '" + *end + "'");
      }
      if (!linked.insert(*end).second) {
        throw Error(ErrorCode::InvalidArgument, "coil '" + *end + "' appears in more than one link");
      }
    }
    if (link.relative_sign != 1 && link.relative_sign != -1) {
      throw Error(ErrorCode::InvalidArgument, "relative_sign must be +1 or -1");
    }
    if (link.logical_name.empty()) link.logical_name = link.a;
    if (!logical.insert(link.logical_name).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate logical current '" + link.logical_name + "'");
    }
  }
  for (const auto& m : members_) {
    if (!linked.count(m.name) && logical.count(m.name)) {
      throw Error(ErrorCode::InvalidArgument, "logical current name clashes with coil '" + m.name + "'");
    }
  }
}

std::vector<std::string> CoilAssembly::logical_currents() const {
  std::vector<std::string> out;
  for (const auto& m : members_) {
    auto name = driver_of(m.name).first;
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
  }
  return out;
}

std::pair<std::string, int> CoilAssembly::driver_of(const std::string& member) const {
  for (const auto& link : links_) {
    if (link.a == member) return {link.logical_name, 1};
    if (link.b == member) return {link.logical_name, link.relative_sign};
  }
  return {member, 1};
}

Drive CoilAssembly::nominal_drive() const {
  Drive drive;
  for (const auto& m : members_) {
    const auto [logical, sign] = driver_of(m.name);
    if (!drive.count(logical)) drive[logical] = sign * nominal_current(m.shape);
  }
  return drive;
}

const CoilMember& CoilAssembly::member(const std::string& name) const {
  for (const auto& m : members_) {
    if (m.name == name) return m;
  }
  throw Error(ErrorCode::UnknownCoil, "no coil named '" + name + "'");
}

bool CoilAssembly::has_member(const std::string& name) const {
  return std::any_of(members_.begin(), members_.end(), [&](const auto& m) { return m.name == name; });
}

Vec3 field_of_segment(const Vec3& p0, const Vec3& p1, double current, const Vec3& at) {
  return current * segment_kernel(p0, p1, at);
}

std::vector<Vec3> loop_vertices(const FilamentLoop& loop, int segments) {
  if (segments < 3) throw Error(ErrorCode::InvalidArgument, "a loop needs at least 3 segments");
  const auto [u, v] = transverse_basis(loop.normal);
  const double step = 2.0 * std::numbers::pi / segments;
  const double rho = loop.radius * std::sqrt(step / std::sin(step));
  std::vector<Vec3> out;
  out.reserve(segments);
  for (int k = 0; k < segments; ++k) {
    const double phi = step * k;
    out.push_back(loop.center + rho * (std::cos(phi) * u + std::sin(phi) * v));
  }
  return out;
}

std::vector<FilamentLoop> expand(const VolumeCoil& coil) {
  validate(coil, "volume coil");
  const int cells = coil.n_radial * coil.n_axial;
  const double per_filament = coil.current * coil.turns / cells;
  std::vector<FilamentLoop> out;
  out.reserve(cells);
  for (int i = 0; i < coil.n_radial; ++i) {
    const double radius = coil.inner_radius + coil.radial_build * (i + 0.5) / coil.n_radial;
    for (int j = 0; j < coil.n_axial; ++j) {
      const double z = coil.axial_center + coil.axial_thickness * ((j + 0.5) / coil.n_axial - 0.5);
      out.push_back(FilamentLoop{Vec3(0, 0, z), Vec3::UnitZ(), radius, per_filament, 1});
    }
  }
  return out;
}

Vec3 field_of_loop(const FilamentLoop& loop, const Vec3& at, int segments) {
  const auto vertices = loop_vertices(loop, segments);
  Vec3 sum = Vec3::Zero();
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    sum += segment_kernel(vertices[k], vertices[(k + 1) % vertices.size()], at);
  }
  return loop.current * loop.turns * sum;
}

Vec3 field_of_polygon(const FilamentPolygon& polygon, const Vec3& at) {
  validate(polygon, "polygon");
  const auto& v = polygon.vertices;
  Vec3 sum = Vec3::Zero();
  for (std::size_t k = 0; k < v.size(); ++k) {
    sum += segment_kernel(v[k], v[(k + 1) % v.size()], at);
  }
  return polygon.current * polygon.turns * sum;
}

FieldModel::FieldModel(const CoilAssembly& assembly, int segments_per_loop) {
  if (segments_per_loop < 16) {
    throw Error(ErrorCode::InvalidArgument, "segments_per_loop must be >= 16");
  }
  names_ = assembly.logical_currents();
  segments_.resize(names_.size());

  auto add_closed = [](std::vector<Segment>& out, const std::vector<Vec3>& v, double weight) {
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back({v[k], v[(k + 1) % v.size()], weight});
  };

  for (const auto& m : assembly.members()) {
    const auto [logical, sign] = assembly.driver_of(m.name);
    auto& out = segments_[index_of(logical)];
    if (const auto* coil = std::get_if<VolumeCoil>(&m.shape)) {
      VolumeCoil unit = *coil;
      unit.current = sign;
      for (const auto& filament : expand(unit)) {
        add_closed(out, loop_vertices(filament, segments_per_loop), filament.current);
      }
    } else if (const auto* loop = std::get_if<FilamentLoop>(&m.shape)) {
      add_closed(out, loop_vertices(*loop, segments_per_loop), double(sign * loop->turns));
    } else {
      const auto& polygon = std::get<FilamentPolygon>(m.shape);
      add_closed(out, polygon.vertices, double(sign * polygon.turns));
    }
  }
}

std::size_t FieldModel::index_of(const std::string& logical) const {
  const auto it = std::find(names_.begin(), names_.end(), logical);
  if (it == names_.end()) {
    throw Error(ErrorCode::UnknownCoil, "no logical current named '" + logical + "'");
  }
  return static_cast<std::size_t>(it - names_.begin());
}

Vec3 FieldModel::unit_field(const std::string& logical, const Vec3& at) const {
  Vec3 sum = Vec3::Zero();
  for (const auto& s : segments_[index_of(logical)]) sum += s.weight * segment_kernel(s.p0, s.p1, at);
  return sum;
}

Vec3 FieldModel::field(const Drive& drive, const Vec3& at) const {
  Vec3 total = Vec3::Zero();
  for (const auto& [name, current] : drive) {
    const std::size_t idx = index_of(name);
    if (current == 0.0) continue;
    Vec3 sum = Vec3::Zero();
    for (const auto& s : segments_[idx]) sum += s.weight * segment_kernel(s.p0, s.p1, at);
    total += current * sum;
  }
  return total;
}

Mat3 FieldModel::gradient(const Drive& drive, const Vec3& at, double step) const {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "gradient step must be positive");
  Mat3 jac;
  for (int j = 0; j < 3; ++j) {
    const Vec3 h = step * Vec3::Unit(j);
    jac.col(j) = (field(drive, at + h) - field(drive, at - h)) / (2.0 * step);
  }
  return jac;
}

Vec3 field_of_assembly(const CoilAssembly& assembly, const Drive& drive, const Vec3& at,
                       int segments_per_loop) {
  return FieldModel(assembly, segments_per_loop).field(drive, at);
}

Mat3 gradient_matrix(const CoilAssembly& assembly, const Drive& drive, const Vec3& at, double step,
                     int segments_per_loop) {
  return FieldModel(assembly, segments_per_loop).gradient(drive, at, step);
}

namespace {

FilamentPolygon square(const Vec3& center, const Vec3& normal, double side) {
  const auto [u, v] = transverse_basis(normal);
  const double h = side / 2.0;
  return FilamentPolygon{{center + h * (u - v), center + h * (u + v), center + h * (-u + v),
                          center + h * (-u - v)},
                         0.0,
                         1};
}

}  // namespace

CoilAssembly reference_assembly(const ReferenceGeometry& g) {
  using namespace reference_names;
  auto pack = [&](double inner_separation, int turns, double sign, double current) {
    return VolumeCoil{g.coil_inner_radius,
                      g.coil_radial_build,
                      g.coil_axial_thickness,
                      sign * (inner_separation / 2.0 + g.coil_axial_thickness / 2.0),
                      turns,
                      8,
                      5,
                      current};
  };

  std::vector<CoilMember> members;
  // Bottom MOT coil carries +I, top carries -I: above the center the field
  // then points down (inward), which is Q > 0.
  members.push_back({"mot_bottom", pack(g.mot_inner_separation, g.mot_turns, -1, kNominalMotCurrent)});
  members.push_back({"mot_top", pack(g.mot_inner_separation, g.mot_turns, +1, -kNominalMotCurrent)});
  members.push_back({"motplus_bottom", pack(g.motplus_inner_separation, g.motplus_turns, -1, 0.0)});
  members.push_back({"motplus_top", pack(g.motplus_inner_separation, g.motplus_turns, +1, 0.0)});

  const double offset = g.compensation_separation / 2.0;
  for (const auto& [axis, tag] : {std::pair{Vec3::UnitX(), "x"}, std::pair{Vec3::UnitY(), "y"}}) {
    for (const auto& [sign, side] : {std::pair{-1.0, "neg"}, std::pair{1.0, "pos"}}) {
      auto loop = square(sign * offset * axis, axis, g.compensation_side);
      loop.turns = g.compensation_turns;
      members.push_back({std::string("comp_") + tag + "_" + side, loop});
    }
  }

  std::vector<PairLink> links{
      {"mot_bottom", "mot_top", -1, kMot},
      {"motplus_bottom", "motplus_top", 1, kMotPlus},
      {"comp_x_neg", "comp_x_pos", 1, kCompX},
      {"comp_y_neg", "comp_y_pos", 1, kCompY},
  };
  return CoilAssembly(std::move(members), std::move(links));
}

double calibrate_mot_turns(const ReferenceGeometry& geometry, double nominal_current,
                           double target_gradient) {
  ReferenceGeometry unit = geometry;
  unit.mot_turns = 1;
  const FieldModel model(reference_assembly(unit));
  const Mat3 jac = model.gradient({{reference_names::kMot, nominal_current}}, Vec3::Zero());
  // The field is linear in the turn count, so one evaluation solves it.
  return target_gradient / jac(0, 0);
}

}  // namespace buoy
