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

#include "buoy/coil_io.hpp"

#include <json.hpp>

#include "buoy/errors.hpp"

namespace buoy {
namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ConfigError, std::string(what) + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

struct ShapeWriter {
  json& out;
  void operator()(const VolumeCoil& c) const {
    out["kind"] = "volume_coil";
    out["inner_radius"] = c.inner_radius;
    out["radial_build"] = c.radial_build;
    out["axial_thickness"] = c.axial_thickness;
    out["axial_center"] = c.axial_center;
    out["turns"] = c.turns;
    out["filament_grid"] = json::array({c.n_radial, c.n_axial});
    out["current"] = c.current;
  }
  void operator()(const FilamentLoop& l) const {
    out["kind"] = "filament_loop";
    out["center"] = vec_json(l.center);
    out["normal"] = vec_json(l.normal);
    out["radius"] = l.radius;
    out["turns"] = l.turns;
    out["current"] = l.current;
  }
  void operator()(const FilamentPolygon& p) const {
    out["kind"] = "filament_polygon";
    json vertices = json::array();
    for (const auto& v : p.vertices) vertices.push_back(vec_json(v));
    out["vertices"] = vertices;
    out["turns"] = p.turns;
    out["current"] = p.current;
  }
};

CoilShape shape_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "volume_coil") {
    VolumeCoil c;
    c.inner_radius = j.at("inner_radius").get<double>();
    c.radial_build = j.value("radial_build", 0.0);
    c.axial_thickness = j.value("axial_thickness", 0.0);
    c.axial_center = j.at("axial_center").get<double>();
    c.turns = j.value("turns", 1);
    if (j.contains("filament_grid")) {
      const auto& grid = j["filament_grid"];
      if (!grid.is_array() || grid.size() != 2) throw Error(ErrorCode::ConfigError, "filament_grid must be [n_radial, n_axial]");
      c.n_radial = grid[0].get<int>();
      c.n_axial = grid[1].get<int>();
    }
    c.current = j.value("current", 0.0);
    return c;
  }
  if (kind == "filament_loop") {
    FilamentLoop l;
    l.center = vec_from(j.at("center"), "center");
    l.normal = vec_from(j.at("normal"), "normal");
    l.radius = j.at("radius").get<double>();
    l.turns = j.value("turns", 1);
    l.current = j.value("current", 0.0);
    return l;
  }
  if (kind == "filament_polygon") {
    FilamentPolygon p;
    for (const auto& v : j.at("vertices")) p.vertices.push_back(vec_from(v, "vertex"));
    p.turns = j.value("turns", 1);
    p.current = j.value("current", 0.0);
    return p;
  }
  throw Error(ErrorCode::ConfigError, "unknown coil kind '" + kind + "'");
}

}  // namespace

std::string assembly_to_json(const CoilAssembly& assembly) {
  json doc;
  doc["members"] = json::array();
  for (const auto& m : assembly.members()) {
    json entry;
    entry["name"] = m.name;
    std::visit(ShapeWriter{entry}, m.shape);
    doc["members"].push_back(entry);
  }
  doc["pair_links"] = json::array();
  for (const auto& link : assembly.links()) {
    doc["pair_links"].push_back(
        {{"a", link.a}, {"b", link.b}, {"relative_sign", link.relative_sign}, {"name", link.logical_name}});
  }
  return doc.dump(2);
}

CoilAssembly assembly_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("coil assembly is not valid JSON: ") + e.what());
  }
  try {
    std::vector<CoilMember> members;
    for (const auto& m : doc.at("members")) members.push_back({m.at("name").get<std::string>(), shape_from(m)});
    std::vector<PairLink> links;
    if (doc.contains("pair_links")) {
      for (const auto& l : doc["pair_links"]) {
        links.push_back({l.at("a").get<std::string>(), l.at("b").get<std::string>(), l.value("relative_sign", 1),
                         l.value("name", std::string())});
      }
    }
    return CoilAssembly(std::move(members), std::move(links));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed coil assembly: ") + e.what());
  }
}

}  // namespace buoy
