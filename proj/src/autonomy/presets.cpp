#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "twinforge/autonomy.hpp"

namespace twinforge::autonomy {

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

}  // namespace

PresetFile default_presets() {
  PresetFile f;
  f.preset(ModelId::v3) = {ModelId::v3, 0.95, 60.0, 0.1, 0.9, 0.12, 50.0};
  f.preset(ModelId::v2) = {ModelId::v2, 0.85, 60.0, 0.3, 0.8, 0.12, 50.0};
  f.preset(ModelId::v3_tiny) = {ModelId::v3_tiny, 0.55, 60.0, 0.9, 0.7, 0.12, 80.0};
  f.preset(ModelId::v2_tiny) = {ModelId::v2_tiny, 0.40, 60.0, 1.0, 0.7, 0.12, 80.0};
  return f;
}

PresetFile presets_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("preset file is not valid JSON: ") + e.what());
  }
  PresetFile f = default_presets();
  try {
    check_keys(j, {"schema_version", "presets", "detector", "aeb", "headlights"}, "preset file");
    if (j.value("schema_version", 0) != kSchemaVersion) {
      throw ConfigError("unsupported preset schema_version");
    }
    if (j.contains("presets")) {
      for (const auto& p : j.at("presets")) {
        check_keys(p, {"model", "base_detect_rate", "range_halflife", "low_light_penalty",
                       "confidence_mean", "confidence_spread", "min_pixel_area"},
                   "preset");
        const auto id = parse_model(p.at("model").get<std::string>());
        if (!id) throw ConfigError("unknown model in preset file");
        auto& m = f.preset(*id);
        read(p, "base_detect_rate", m.base_detect_rate);
        read(p, "range_halflife", m.range_halflife);
        read(p, "low_light_penalty", m.low_light_penalty);
        read(p, "confidence_mean", m.confidence_mean);
        read(p, "confidence_spread", m.confidence_spread);
        read(p, "min_pixel_area", m.min_pixel_area);
      }
    }
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      check_keys(d, {"daylight_exponent", "low_light_threshold", "low_light_gain",
                     "confidence_visibility_mix", "headlight_gain", "false_positive_rate",
                     "false_positive_max_area"},
                 "detector");
      read(d, "daylight_exponent", f.detector.daylight_exponent);
      read(d, "low_light_threshold", f.detector.low_light_threshold);
      read(d, "low_light_gain", f.detector.low_light_gain);
      read(d, "confidence_visibility_mix", f.detector.confidence_visibility_mix);
      if (d.contains("headlight_gain")) {
        const auto g = d.at("headlight_gain").get<std::vector<double>>();
        if (g.size() != 3) throw ConfigError("headlight_gain needs 3 entries");
        std::copy(g.begin(), g.end(), f.detector.headlight_gain.begin());
      }
      read(d, "false_positive_rate", f.detector.false_positive_rate);
      read(d, "false_positive_max_area", f.detector.false_positive_max_area);
    }
    if (j.contains("aeb")) {
      const auto& a = j.at("aeb");
      check_keys(a, {"threat_classes", "min_confidence", "min_area", "persistence_frames", "fos",
                     "cruise_speed", "a_max", "kp", "standstill_speed", "camera_to_bumper",
                     "class_heights"},
                 "aeb");
      read(a, "threat_classes", f.aeb.threat_classes);
      read(a, "min_confidence", f.aeb.min_confidence);
      read(a, "min_area", f.aeb.min_area);
      read(a, "persistence_frames", f.aeb.persistence_frames);
      read(a, "fos", f.aeb.fos);
      read(a, "cruise_speed", f.aeb.cruise_speed);
      read(a, "a_max", f.aeb.a_max);
      read(a, "kp", f.aeb.kp);
      read(a, "standstill_speed", f.aeb.standstill_speed);
      read(a, "camera_to_bumper", f.aeb.camera_to_bumper);
      read(a, "class_heights", f.aeb.class_heights);
    }
    if (j.contains("headlights")) {
      const auto& h = j.at("headlights");
      check_keys(h, {"day_ambient", "fog_low", "night_ambient", "fog_high"}, "headlights");
      read(h, "day_ambient", f.headlights.day_ambient);
      read(h, "fog_low", f.headlights.fog_low);
      read(h, "night_ambient", f.headlights.night_ambient);
      read(h, "fog_high", f.headlights.fog_high);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("preset file: ") + e.what());
  }
  for (const auto& p : f.presets) p.validate();
  f.aeb.validate();
  return f;
}

PresetFile load_presets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open preset file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return presets_from_json(ss.str());
}

std::string presets_to_json(const PresetFile& f) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["presets"] = json::array();
  for (const auto& p : f.presets) {
    j["presets"].push_back({{"model", to_string(p.model)},
                            {"base_detect_rate", p.base_detect_rate},
                            {"range_halflife", p.range_halflife},
                            {"low_light_penalty", p.low_light_penalty},
                            {"confidence_mean", p.confidence_mean},
                            {"confidence_spread", p.confidence_spread},
                            {"min_pixel_area", p.min_pixel_area}});
  }
  const auto& d = f.detector;
  j["detector"] = {{"daylight_exponent", d.daylight_exponent},
                   {"low_light_threshold", d.low_light_threshold},
                   {"low_light_gain", d.low_light_gain},
                   {"confidence_visibility_mix", d.confidence_visibility_mix},
                   {"headlight_gain", d.headlight_gain},
                   {"false_positive_rate", d.false_positive_rate},
                   {"false_positive_max_area", d.false_positive_max_area}};
  const auto& a = f.aeb;
  j["aeb"] = {{"threat_classes", a.threat_classes},
              {"min_confidence", a.min_confidence},
              {"min_area", a.min_area},
              {"persistence_frames", a.persistence_frames},
              {"fos", a.fos},
              {"cruise_speed", a.cruise_speed},
              {"a_max", a.a_max},
              {"kp", a.kp},
              {"standstill_speed", a.standstill_speed},
              {"camera_to_bumper", a.camera_to_bumper},
              {"class_heights", a.class_heights}};
  j["headlights"] = {{"day_ambient", f.headlights.day_ambient},
                     {"fog_low", f.headlights.fog_low},
                     {"night_ambient", f.headlights.night_ambient},
                     {"fog_high", f.headlights.fog_high}};
  return j.dump(2);
}

}  // namespace twinforge::autonomy
