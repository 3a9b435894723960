#include "egosearch/scene_io.hpp"

#include <fstream>
#include <set>

namespace egosearch {

using nlohmann::json;

namespace {

json vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw SceneError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json box(const Box& b) {
  return {{"center", vec3(b.center)}, {"half", vec3(b.half)}, {"yaw", b.yaw}};
}

Box box(const json& j) {
  Box b;
  b.center = vec3(j.at("center"));
  b.half = vec3(j.at("half"));
  b.yaw = j.at("yaw").get<double>();
  return b;
}

std::vector<Box> boxes(const json& j) {
  std::vector<Box> out;
  for (const auto& e : j) out.push_back(box(e));
  return out;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw SceneError(std::string("unknown key '") + k + "' in " + what);
  }
}

}  // namespace

json scene_to_json(const Scene& s) {
  json walls = json::array(), furniture = json::array(), cabinets = json::array();
  for (const Box& b : s.walls()) walls.push_back(box(b));
  for (const Box& b : s.furniture()) furniture.push_back(box(b));
  for (const Cabinet& c : s.cabinets()) {
    cabinets.push_back({{"shell", box(c.shell)}, {"wall", c.wall}, {"interior", box(c.interior_zone)}});
  }
  const Bounds& b = s.bounds();
  return {
      {"version", kSceneFormatVersion},
      {"bounds", {b.x_min, b.y_min, b.x_max, b.y_max}},
      {"walls", walls},
      {"furniture", furniture},
      {"cabinets", cabinets},
      {"target", {{"position", vec3(s.target().position)}, {"radius", s.target().radius}}},
      {"nav_resolution", s.nav_resolution()},
      {"agent_radius", s.agent_radius()},
      {"agent_height", s.agent_height()},
  };
}

Scene scene_from_json(const json& j) {
  try {
    reject_unknown(j,
                   {"version", "bounds", "walls", "furniture", "cabinets", "target",
                    "nav_resolution", "agent_radius", "agent_height"},
                   "scene");
    const int version = j.at("version").get<int>();
    if (version != kSceneFormatVersion) {
      throw SceneError("unsupported scene version " + std::to_string(version));
    }
    const auto& jb = j.at("bounds");
    if (!jb.is_array() || jb.size() != 4) throw SceneError("bounds must have 4 numbers");
    Bounds bounds{jb[0].get<double>(), jb[1].get<double>(), jb[2].get<double>(), jb[3].get<double>()};
    std::vector<Cabinet> cabinets;
    for (const auto& c : j.at("cabinets")) {
      Cabinet cab;
      cab.shell = box(c.at("shell"));
      cab.wall = c.at("wall").get<double>();
      cab.interior_zone = box(c.at("interior"));
      cabinets.push_back(cab);
    }
    TargetObject target;
    target.position = vec3(j.at("target").at("position"));
    target.radius = j.at("target").at("radius").get<double>();
    return Scene(bounds, boxes(j.at("walls")), boxes(j.at("furniture")), std::move(cabinets), target,
                 j.at("nav_resolution").get<double>(), j.at("agent_radius").get<double>(),
                 j.at("agent_height").get<double>());
  } catch (const json::exception& e) {
    throw SceneError(std::string("malformed scene file: ") + e.what());
  }
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw SceneError("cannot write " + path.string());
  out << scene_to_json(scene).dump(2) << '\n';
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SceneError(std::string("cannot parse scene file: ") + e.what());
  }
  return scene_from_json(j);
}

json scene_params_to_json(const SceneParams& p) {
  return {
      {"bounds", {p.bounds.x_min, p.bounds.y_min, p.bounds.x_max, p.bounds.y_max}},
      {"furniture_min", p.furniture_min},
      {"furniture_max", p.furniture_max},
      {"cabinet_min", p.cabinet_min},
      {"cabinet_max", p.cabinet_max},
      {"partition_min", p.partition_min},
      {"partition_max", p.partition_max},
      {"wall_height", p.wall_height},
      {"wall_thickness", p.wall_thickness},
      {"agent_radius", p.agent_radius},
      {"agent_height", p.agent_height},
      {"nav_resolution", p.nav_resolution},
      {"target_radius", p.target_radius},
      {"reach_distance", p.reach_distance},
      {"max_retries", p.max_retries},
  };
}

SceneParams scene_params_from_json(const json& j, SceneParams p) {
  const json defaults = scene_params_to_json(p);
  for (const auto& [k, v] : j.items()) {
    if (!defaults.contains(k)) throw SceneError("unknown key '" + k + "' in scene params");
  }
  try {
    if (j.contains("bounds")) {
      const auto& b = j["bounds"];
      if (!b.is_array() || b.size() != 4) throw SceneError("bounds must have 4 numbers");
      p.bounds = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    }
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("furniture_min", p.furniture_min);
    get("furniture_max", p.furniture_max);
    get("cabinet_min", p.cabinet_min);
    get("cabinet_max", p.cabinet_max);
    get("partition_min", p.partition_min);
    get("partition_max", p.partition_max);
    get("wall_height", p.wall_height);
    get("wall_thickness", p.wall_thickness);
    get("agent_radius", p.agent_radius);
    get("agent_height", p.agent_height);
    get("nav_resolution", p.nav_resolution);
    get("target_radius", p.target_radius);
    get("reach_distance", p.reach_distance);
    get("max_retries", p.max_retries);
  } catch (const json::exception& e) {
    throw SceneError(std::string("bad scene params: ") + e.what());
  }
  return p;
}

}  // namespace egosearch
