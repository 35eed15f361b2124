#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "segment.hpp"

namespace v2x {

inline constexpr int kSceneFormatVersion = 1;

struct Material {
  std::string name;
  double relative_permittivity = 1.0;
  double conductivity = 0.0;  // S/m; +inf marks a perfect conductor

  friend bool operator==(const Material&, const Material&) = default;
};

// Rectangular footprint extruded from the ground to `height`.
struct Building {
  std::string name;
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double height = 0.0;
  Material material;

  Box box() const { return {{x_min, y_min, 0.0}, {x_max, y_max, height}}; }

  friend bool operator==(const Building&, const Building&) = default;
};

struct Scene {
  std::vector<Building> buildings;
  Material ground;
  Vec3 tx;
  double tx_power_dbm = 0.0;
  std::vector<double> bands_ghz;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct Route {
  std::vector<Vec3> points;
  std::vector<Segment> labels;
  double speed_mps = 0.0;

  std::size_t size() const { return points.size(); }

  friend bool operator==(const Route&, const Route&) = default;
};

// A scene together with the receiver route driven through it.
struct Scenario {
  std::string name;
  Scene scene;
  Route route;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace detail {

inline void validate_material(const Material& m) {
  if (!(m.relative_permittivity >= 1.0))
    throw ValidationError("material '" + m.name + "': relative permittivity must be >= 1");
  if (!(m.conductivity >= 0.0))
    throw ValidationError("material '" + m.name + "': conductivity must be >= 0");
}

inline bool inside_any(const Scene& scene, Vec3 p, const Building** hit = nullptr) {
  for (const auto& b : scene.buildings) {
    if (b.box().contains(p)) {
      if (hit) *hit = &b;
      return true;
    }
  }
  return false;
}

inline Vec3 read_point(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(std::string(what) + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json write_point(Vec3 p) { return nlohmann::json::array({p.x, p.y, p.z}); }

inline double read_conductivity(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw ValidationError("conductivity: expected a number or \"inf\"");
  }
  return j.get<double>();
}

}  // namespace detail

inline void validate(const Scene& scene) {
  detail::validate_material(scene.ground);
  for (const auto& b : scene.buildings) {
    detail::validate_material(b.material);
    if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min))
      throw ValidationError("building '" + b.name + "': footprint must have positive area");
    if (!(b.height > 0.0))
      throw ValidationError("building '" + b.name + "': height must be positive");
  }
  if (!(scene.tx.z > 0.0)) throw ValidationError("tx must be above the ground");
  const Building* hit = nullptr;
  if (detail::inside_any(scene, scene.tx, &hit))
    throw ValidationError("tx inside geometry (building '" + hit->name + "')");
  if (scene.bands_ghz.empty()) throw ValidationError("band list is empty");
  for (std::size_t i = 0; i < scene.bands_ghz.size(); ++i) {
    if (!(scene.bands_ghz[i] > 0.0)) throw ValidationError("bands must be positive");
    if (i > 0 && !(scene.bands_ghz[i] > scene.bands_ghz[i - 1]))
      throw ValidationError("bands must be strictly increasing");
  }
}

// LOS iff the tx-rx segment passes through no building.
inline Segment classify_visibility(const Scene& scene, Vec3 rx) {
  const Building* hit = nullptr;
  if (detail::inside_any(scene, rx, &hit))
    throw ValidationError("rx inside building '" + hit->name + "'");
  for (const auto& b : scene.buildings)
    if (segment_crosses_interior(scene.tx, rx, b.box())) return Segment::nlos;
  return Segment::los;
}

// Builds and validates a scenario from a parsed scene document.
//
// Route points come either from an explicit "points" list or from a list of
// line "segments", each with a start, an end and a point count. Labels given in
// the document win; unlabeled points are classified geometrically.
inline Scenario build_scene(const nlohmann::json& doc) {
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kSceneFormatVersion)
      throw ValidationError("unsupported scene format_version " + std::to_string(version));

    Scenario out;
    out.name = doc.value("name", std::string{"unnamed"});

    std::map<std::string, Material> materials;
    for (const auto& jm : doc.value("materials", nlohmann::json::array())) {
      Material m;
      m.name = jm.at("name").get<std::string>();
      m.relative_permittivity = jm.at("relative_permittivity").get<double>();
      m.conductivity = detail::read_conductivity(jm.at("conductivity"));
      detail::validate_material(m);
      if (!materials.emplace(m.name, m).second)
        throw ValidationError("duplicate material '" + m.name + "'");
    }
    auto material = [&](const std::string& name) {
      auto it = materials.find(name);
      if (it == materials.end()) throw ValidationError("unknown material '" + name + "'");
      return it->second;
    };

    Scene& scene = out.scene;
    scene.ground = material(doc.at("ground_material").get<std::string>());
    for (const auto& jb : doc.value("buildings", nlohmann::json::array())) {
      Building b;
      b.name = jb.value("name", "building" + std::to_string(scene.buildings.size()));
      const auto& xs = jb.at("x");
      const auto& ys = jb.at("y");
      b.x_min = xs.at(0).get<double>();
      b.x_max = xs.at(1).get<double>();
      b.y_min = ys.at(0).get<double>();
      b.y_max = ys.at(1).get<double>();
      b.height = jb.at("height").get<double>();
      b.material = material(jb.at("material").get<std::string>());
      scene.buildings.push_back(std::move(b));
    }
    const auto& jtx = doc.at("tx");
    scene.tx = detail::read_point(jtx.at("position"), "tx.position");
    scene.tx_power_dbm = jtx.value("power_dbm", 0.0);
    scene.bands_ghz = doc.at("bands_ghz").get<std::vector<double>>();
    validate(scene);

    Route& route = out.route;
    std::vector<std::optional<Segment>> labels;
    const auto& jr = doc.at("route");
    route.speed_mps = jr.value("speed_mps", 0.0);
    if (!(route.speed_mps >= 0.0)) throw ValidationError("route speed must be >= 0");

    auto parse_label = [](const nlohmann::json& j) -> std::optional<Segment> {
      if (j.is_null()) return std::nullopt;
      auto s = parse_segment(j.get<std::string>());
      if (!s) throw ValidationError("route label must be LOS or NLOS");
      return s;
    };

    if (jr.contains("points")) {
      for (const auto& jp : jr.at("points")) route.points.push_back(detail::read_point(jp, "route point"));
      if (jr.contains("labels")) {
        const auto& jl = jr.at("labels");
        if (jl.size() != route.points.size())
          throw ValidationError("route labels must match the number of points");
        for (const auto& l : jl) labels.push_back(parse_label(l));
      }
    } else {
      for (const auto& js : jr.at("segments")) {
        const Vec3 a = detail::read_point(js.at("start"), "segment start");
        const Vec3 b = detail::read_point(js.at("end"), "segment end");
        const int count = js.at("count").get<int>();
        if (count < 1) throw ValidationError("segment count must be >= 1");
        const auto label = parse_label(js.value("label", nlohmann::json()));
        for (int i = 0; i < count; ++i) {
          const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
          route.points.push_back(a + (b - a) * t);
          labels.push_back(label);
        }
      }
    }
    if (route.points.empty()) throw ValidationError("route must contain at least one point");
    labels.resize(route.points.size());

    route.labels.reserve(route.points.size());
    for (std::size_t i = 0; i < route.points.size(); ++i) {
      if (!(route.points[i].z > 0.0))
        throw ValidationError("route point " + std::to_string(i) + " must be above the ground");
      const Segment geometric = classify_visibility(scene, route.points[i]);
      route.labels.push_back(labels[i].value_or(geometric));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene document: ") + e.what());
  }
}

inline Scenario build_scene_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("scene document is not valid JSON: ") + e.what());
  }
  return build_scene(doc);
}

inline Scenario load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return build_scene_text(ss.str());
}

// Canonical document: materials table, explicit points and labels.
inline nlohmann::json serialize(const Scenario& s) {
  using nlohmann::json;
  std::map<std::string, Material> materials;
  auto add = [&](const Material& m) {
    auto [it, inserted] = materials.emplace(m.name, m);
    if (!inserted && !(it->second == m))
      throw ValidationError("two different materials share the name '" + m.name + "'");
  };
  add(s.scene.ground);
  for (const auto& b : s.scene.buildings) add(b.material);

  json doc;
  doc["format_version"] = kSceneFormatVersion;
  doc["name"] = s.name;
  json jm = json::array();
  for (const auto& [name, m] : materials) {
    json cond = std::isinf(m.conductivity) ? json("inf") : json(m.conductivity);
    jm.push_back({{"name", name}, {"relative_permittivity", m.relative_permittivity}, {"conductivity", cond}});
  }
  doc["materials"] = jm;
  doc["ground_material"] = s.scene.ground.name;
  json jb = json::array();
  for (const auto& b : s.scene.buildings)
    jb.push_back({{"name", b.name},
                  {"x", {b.x_min, b.x_max}},
                  {"y", {b.y_min, b.y_max}},
                  {"height", b.height},
                  {"material", b.material.name}});
  doc["buildings"] = jb;
  doc["tx"] = {{"position", detail::write_point(s.scene.tx)}, {"power_dbm", s.scene.tx_power_dbm}};
  doc["bands_ghz"] = s.scene.bands_ghz;
  json points = json::array();
  json labels = json::array();
  for (std::size_t i = 0; i < s.route.points.size(); ++i) {
    points.push_back(detail::write_point(s.route.points[i]));
    labels.push_back(std::string(to_string(s.route.labels[i])));
  }
  doc["route"] = {{"speed_mps", s.route.speed_mps}, {"points", points}, {"labels", labels}};
  return doc;
}

}  // namespace v2x
