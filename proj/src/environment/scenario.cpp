#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "twinforge/environment.hpp"

namespace twinforge::environment {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items()) {
    if (!ok.count(k)) throw ConfigError(std::string("unknown key '") + k + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <std::size_t N>
void read_table(const json& j, const char* key, std::array<double, N>& out) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != N) throw ConfigError(std::string("table ") + key + " has the wrong length");
  std::copy(v.begin(), v.end(), out.begin());
}

double yaw_of(const Pose& p) { return euler_from_rotation(p.linear()).z(); }

}  // namespace

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  try {
    check_keys(j, {"schema_version", "terrain", "obstacles", "ego", "cruise_speed",
                   "post_stop_window", "collision_standstill", "t_max", "condition", "tables"},
               "scenario");
    if (j.value("schema_version", 0) != kSchemaVersion) {
      throw ConfigError("unsupported scenario schema_version");
    }
    if (j.contains("terrain")) {
      const auto& t = j.at("terrain");
      check_keys(t, {"type", "seed", "length", "width", "cell_size", "base_height", "wavelength",
                     "max_grade_deg", "crest_x", "detail_waves", "detail_grade_deg"},
                 "terrain");
      const std::string type = t.value("type", "corridor");
      if (type == "corridor") {
        s.terrain_kind = TerrainKind::corridor;
      } else if (type == "flat") {
        s.terrain_kind = TerrainKind::flat;
      } else {
        throw ConfigError("unknown terrain type '" + type + "'");
      }
      auto& c = s.corridor;
      read(t, "seed", c.seed);
      read(t, "length", c.length);
      read(t, "width", c.width);
      read(t, "cell_size", c.cell_size);
      read(t, "base_height", c.base_height);
      read(t, "wavelength", c.wavelength);
      read(t, "max_grade_deg", c.max_grade_deg);
      read(t, "crest_x", c.crest_x);
      read(t, "detail_waves", c.detail_waves);
      read(t, "detail_grade_deg", c.detail_grade_deg);
    }
    if (j.contains("obstacles")) {
      s.obstacles.clear();
      int next_id = 1;
      for (const auto& o : j.at("obstacles")) {
        check_keys(o, {"id", "label", "position", "yaw", "half_extents", "dynamic", "mass"},
                   "obstacle");
        Obstacle ob;
        ob.id = o.value("id", next_id);
        next_id = ob.id + 1;
        ob.label = o.value("label", ob.label);
        const auto pos = o.at("position").get<std::vector<double>>();
        if (pos.size() != 2) throw ConfigError("obstacle position is [x, y]");
        ob.pose = make_pose(Vec3(pos[0], pos[1], 0.0), 0.0, 0.0, o.value("yaw", 0.0));
        if (o.contains("half_extents")) {
          const auto h = o.at("half_extents").get<std::vector<double>>();
          if (h.size() != 3) throw ConfigError("half_extents is [x, y, z]");
          ob.half_extents = Vec3(h[0], h[1], h[2]);
        }
        if ((ob.half_extents.array() <= 0.0).any()) {
          throw ConfigError("obstacle extents must be positive");
        }
        ob.dynamic = o.value("dynamic", ob.dynamic);
        ob.mass = o.value("mass", ob.mass);
        if (!(ob.mass > 0.0)) throw ConfigError("obstacle mass must be positive");
        s.obstacles.push_back(ob);
      }
    }
    if (j.contains("ego")) {
      const auto& e = j.at("ego");
      check_keys(e, {"x", "y", "yaw"}, "ego");
      read(e, "x", s.ego_x);
      read(e, "y", s.ego_y);
      read(e, "yaw", s.ego_yaw);
    }
    read(j, "cruise_speed", s.cruise_speed);
    read(j, "post_stop_window", s.post_stop_window);
    read(j, "collision_standstill", s.collision_standstill);
    read(j, "t_max", s.t_max);
    if (j.contains("condition")) {
      const auto& c = j.at("condition");
      check_keys(c, {"weather", "time"}, "condition");
      if (c.contains("weather")) {
        auto w = parse_weather(c.at("weather").get<std::string>());
        if (!w) throw ConfigError("unknown weather in scenario");
        s.weather = *w;
      }
      if (c.contains("time")) {
        auto t = parse_time(c.at("time").get<std::string>());
        if (!t) throw ConfigError("unknown time of day in scenario");
        s.time = *t;
      }
    }
    if (j.contains("tables")) {
      const auto& t = j.at("tables");
      check_keys(t, {"weather_visibility", "weather_ambient", "weather_fog", "light",
                     "weather_affects_traction", "weather_traction"},
                 "tables");
      read_table(t, "weather_visibility", s.tables.weather_visibility);
      read_table(t, "weather_ambient", s.tables.weather_ambient);
      read_table(t, "weather_fog", s.tables.weather_fog);
      read_table(t, "light", s.tables.light);
      read(t, "weather_affects_traction", s.tables.weather_affects_traction);
      read_table(t, "weather_traction", s.tables.weather_traction);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (!(s.cruise_speed > 0.0) || !(s.t_max > 0.0) || s.post_stop_window < 0.0 ||
      s.collision_standstill < 0.0) {
    throw ConfigError("scenario episode limits must be positive");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  const auto& c = s.corridor;
  j["terrain"] = {{"type", s.terrain_kind == TerrainKind::flat ? "flat" : "corridor"},
                  {"seed", c.seed},
                  {"length", c.length},
                  {"width", c.width},
                  {"cell_size", c.cell_size},
                  {"base_height", c.base_height},
                  {"wavelength", c.wavelength},
                  {"max_grade_deg", c.max_grade_deg},
                  {"crest_x", c.crest_x},
                  {"detail_waves", c.detail_waves},
                  {"detail_grade_deg", c.detail_grade_deg}};
  j["obstacles"] = json::array();
  for (const auto& o : s.obstacles) {
    const Vec3 t = o.pose.translation();
    j["obstacles"].push_back({{"id", o.id},
                              {"label", o.label},
                              {"position", {t.x(), t.y()}},
                              {"yaw", yaw_of(o.pose)},
                              {"half_extents", {o.half_extents.x(), o.half_extents.y(),
                                                o.half_extents.z()}},
                              {"dynamic", o.dynamic},
                              {"mass", o.mass}});
  }
  j["ego"] = {{"x", s.ego_x}, {"y", s.ego_y}, {"yaw", s.ego_yaw}};
  j["cruise_speed"] = s.cruise_speed;
  j["post_stop_window"] = s.post_stop_window;
  j["collision_standstill"] = s.collision_standstill;
  j["t_max"] = s.t_max;
  j["condition"] = {{"weather", to_string(s.weather)}, {"time", to_string(s.time)}};
  j["tables"] = {{"weather_visibility", s.tables.weather_visibility},
                 {"weather_ambient", s.tables.weather_ambient},
                 {"weather_fog", s.tables.weather_fog},
                 {"light", s.tables.light},
                 {"weather_affects_traction", s.tables.weather_affects_traction},
                 {"weather_traction", s.tables.weather_traction}};
  return j.dump(2);
}

Scene build_scene(const Scenario& s) {
  Scene scene;
  if (s.terrain_kind == TerrainKind::corridor) {
    scene.terrain = make_corridor(s.corridor);
  } else {
    const auto& c = s.corridor;
    scene.terrain = TerrainHeightmap::flat(c.base_height, c.length, c.width, c.cell_size,
                                           Vec2(0.0, -c.width / 2.0));
  }
  for (auto ob : s.obstacles) {
    Vec3 t = ob.pose.translation();
    t.z() = scene.terrain.height_at(t.x(), t.y()) + ob.half_extents.z();
    ob.pose.translation() = t;
    scene.obstacles.push_back(ob);
  }
  return scene;
}

}  // namespace twinforge::environment
