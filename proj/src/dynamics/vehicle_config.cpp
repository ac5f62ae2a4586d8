#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

using nlohmann::json;

namespace {

constexpr int kConfigVersion = 1;

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec2 vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items()) {
    if (!ok.count(k)) throw ConfigError(std::string("unknown key '") + k + "' in " + where);
  }
}

SuspensionParams suspension_from(const json& j, SuspensionParams s) {
  check_keys(j, {"natural_frequency", "damping_ratio", "equilibrium", "force_offset",
                 "antiroll_stiffness", "wheel_mass", "wheel_radius"},
             "suspension");
  read(j, "natural_frequency", s.natural_frequency);
  read(j, "damping_ratio", s.damping_ratio);
  read(j, "equilibrium", s.equilibrium);
  read(j, "force_offset", s.force_offset);
  read(j, "antiroll_stiffness", s.antiroll_stiffness);
  read(j, "wheel_mass", s.wheel_mass);
  read(j, "wheel_radius", s.wheel_radius);
  return s;
}

json suspension_to(const SuspensionParams& s) {
  return {{"natural_frequency", s.natural_frequency}, {"damping_ratio", s.damping_ratio},
          {"equilibrium", s.equilibrium},           {"force_offset", s.force_offset},
          {"antiroll_stiffness", s.antiroll_stiffness}, {"wheel_mass", s.wheel_mass},
          {"wheel_radius", s.wheel_radius}};
}

DriveConfig drive_from(const std::string& s) {
  if (s == "fwd") return DriveConfig::fwd;
  if (s == "rwd") return DriveConfig::rwd;
  if (s == "awd") return DriveConfig::awd;
  throw ConfigError("unknown drive configuration '" + s + "'");
}

const char* drive_name(DriveConfig d) {
  switch (d) {
    case DriveConfig::fwd: return "fwd";
    case DriveConfig::rwd: return "rwd";
    case DriveConfig::awd: return "awd";
  }
  return "awd";
}

}  // namespace

VehicleConfig vehicle_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("vehicle config is not valid JSON: ") + e.what());
  }
  VehicleConfig c;
  try {
    check_keys(j, {"config_version", "sprung_masses", "wheel_mounts", "suspension", "powertrain",
                   "steering", "brake", "tire", "aero", "front_overhang", "rear_overhang",
                   "body_width", "body_height", "fixed_dt"},
               "vehicle config");
    if (j.value("config_version", 0) != kConfigVersion) {
      throw ConfigError("unsupported vehicle config_version");
    }
    if (j.contains("sprung_masses")) {
      const auto& a = j.at("sprung_masses");
      if (!a.is_array() || a.size() != 4) throw ConfigError("sprung_masses needs 4 entries");
      for (std::size_t i = 0; i < 4; ++i) {
        c.sprung_masses[i] = {a[i].at("mass").get<double>(), vec3(a[i].at("position"))};
      }
    }
    if (j.contains("wheel_mounts")) {
      const auto& a = j.at("wheel_mounts");
      if (!a.is_array() || a.size() != 4) throw ConfigError("wheel_mounts needs 4 entries");
      for (std::size_t i = 0; i < 4; ++i) c.wheel_mounts[i] = vec3(a[i]);
    }
    if (j.contains("suspension")) {
      const auto& s = j.at("suspension");
      if (s.is_array()) {
        if (s.size() != 4) throw ConfigError("suspension array needs 4 entries");
        for (std::size_t i = 0; i < 4; ++i) c.suspension[i] = suspension_from(s[i], c.suspension[i]);
      } else {
        for (auto& sp : c.suspension) sp = suspension_from(s, sp);
      }
    }
    if (j.contains("powertrain")) {
      const auto& p = j.at("powertrain");
      check_keys(p, {"torque_curve", "idle_rpm", "forward_ratios", "reverse_ratio", "final_drive",
                     "drive", "torque_drop", "smoothing_gain", "shift_up_rpm", "shift_down_rpm",
                     "shift_duration", "rpm_time_constant", "tire_radius"},
                 "powertrain");
      auto& t = c.powertrain;
      if (p.contains("torque_curve")) {
        t.torque_curve.clear();
        for (const auto& pt : p.at("torque_curve")) {
          const Vec2 v = vec2(pt);
          t.torque_curve.emplace_back(v.x(), v.y());
        }
      }
      read(p, "idle_rpm", t.idle_rpm);
      read(p, "forward_ratios", t.forward_ratios);
      read(p, "reverse_ratio", t.reverse_ratio);
      read(p, "final_drive", t.final_drive);
      if (p.contains("drive")) t.drive = drive_from(p.at("drive").get<std::string>());
      read(p, "torque_drop", t.torque_drop);
      read(p, "smoothing_gain", t.smoothing_gain);
      read(p, "shift_up_rpm", t.shift_up_rpm);
      read(p, "shift_down_rpm", t.shift_down_rpm);
      read(p, "shift_duration", t.shift_duration);
      read(p, "rpm_time_constant", t.rpm_time_constant);
      read(p, "tire_radius", t.tire_radius);
    }
    if (j.contains("steering")) {
      const auto& s = j.at("steering");
      check_keys(s, {"limit", "sensitivity", "speed_factor", "wheelbase", "track", "top_speed"},
                 "steering");
      read(s, "limit", c.steering.limit);
      read(s, "sensitivity", c.steering.sensitivity);
      read(s, "speed_factor", c.steering.speed_factor);
      read(s, "wheelbase", c.steering.wheelbase);
      read(s, "track", c.steering.track);
      read(s, "top_speed", c.steering.top_speed);
    }
    if (j.contains("brake")) {
      const auto& b = j.at("brake");
      check_keys(b, {"disk_radius", "braking_distance_60mph"}, "brake");
      read(b, "disk_radius", c.brake.disk_radius);
      read(b, "braking_distance_60mph", c.brake.braking_distance_60mph);
    }
    if (j.contains("tire")) {
      const auto& t = j.at("tire");
      check_keys(t, {"zero", "extremum", "asymptote", "stiffness"}, "tire");
      c.tire = TireFrictionSpline::fit(vec2(t.value("zero", to_json(c.tire.zero()))),
                                       vec2(t.value("extremum", to_json(c.tire.extremum()))),
                                       vec2(t.value("asymptote", to_json(c.tire.asymptote()))),
                                       t.value("stiffness", c.tire.stiffness()));
    }
    if (j.contains("aero")) {
      const auto& a = j.at("aero");
      check_keys(a, {"drag_max", "drag_idle", "drag_reverse", "max_speed", "reverse_speed",
                     "angular_drag", "downforce_coeff"},
                 "aero");
      read(a, "drag_max", c.aero.drag_max);
      read(a, "drag_idle", c.aero.drag_idle);
      read(a, "drag_reverse", c.aero.drag_reverse);
      read(a, "max_speed", c.aero.max_speed);
      read(a, "reverse_speed", c.aero.reverse_speed);
      read(a, "angular_drag", c.aero.angular_drag);
      read(a, "downforce_coeff", c.aero.downforce_coeff);
    }
    read(j, "front_overhang", c.front_overhang);
    read(j, "rear_overhang", c.rear_overhang);
    read(j, "body_width", c.body_width);
    read(j, "body_height", c.body_height);
    read(j, "fixed_dt", c.fixed_dt);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("vehicle config: ") + e.what());
  }
  c.validate();
  return c;
}

VehicleConfig load_vehicle_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vehicle config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return vehicle_config_from_json(ss.str());
}

std::string vehicle_config_to_json(const VehicleConfig& c) {
  json j;
  j["config_version"] = kConfigVersion;
  for (const auto& m : c.sprung_masses) {
    j["sprung_masses"].push_back({{"mass", m.mass}, {"position", to_json(m.position)}});
  }
  for (const auto& m : c.wheel_mounts) j["wheel_mounts"].push_back(to_json(m));
  for (const auto& s : c.suspension) j["suspension"].push_back(suspension_to(s));
  const auto& t = c.powertrain;
  json curve = json::array();
  for (const auto& [rpm, tq] : t.torque_curve) curve.push_back({rpm, tq});
  j["powertrain"] = {{"torque_curve", curve},
                     {"idle_rpm", t.idle_rpm},
                     {"forward_ratios", t.forward_ratios},
                     {"reverse_ratio", t.reverse_ratio},
                     {"final_drive", t.final_drive},
                     {"drive", drive_name(t.drive)},
                     {"torque_drop", t.torque_drop},
                     {"smoothing_gain", t.smoothing_gain},
                     {"shift_up_rpm", t.shift_up_rpm},
                     {"shift_down_rpm", t.shift_down_rpm},
                     {"shift_duration", t.shift_duration},
                     {"rpm_time_constant", t.rpm_time_constant},
                     {"tire_radius", t.tire_radius}};
  j["steering"] = {{"limit", c.steering.limit},         {"sensitivity", c.steering.sensitivity},
                   {"speed_factor", c.steering.speed_factor}, {"wheelbase", c.steering.wheelbase},
                   {"track", c.steering.track},         {"top_speed", c.steering.top_speed}};
  j["brake"] = {{"disk_radius", c.brake.disk_radius},
                {"braking_distance_60mph", c.brake.braking_distance_60mph}};
  j["tire"] = {{"zero", to_json(c.tire.zero())},
               {"extremum", to_json(c.tire.extremum())},
               {"asymptote", to_json(c.tire.asymptote())},
               {"stiffness", c.tire.stiffness()}};
  j["aero"] = {{"drag_max", c.aero.drag_max},           {"drag_idle", c.aero.drag_idle},
               {"drag_reverse", c.aero.drag_reverse},   {"max_speed", c.aero.max_speed},
               {"reverse_speed", c.aero.reverse_speed}, {"angular_drag", c.aero.angular_drag},
               {"downforce_coeff", c.aero.downforce_coeff}};
  j["front_overhang"] = c.front_overhang;
  j["rear_overhang"] = c.rear_overhang;
  j["body_width"] = c.body_width;
  j["body_height"] = c.body_height;
  j["fixed_dt"] = c.fixed_dt;
  return j.dump(2);
}

}  // namespace twinforge::dynamics
