#include <algorithm>
#include <cctype>

#include "twinforge/environment.hpp"

namespace twinforge::environment {

namespace {
constexpr std::array<std::string_view, 8> kWeatherNames{
    "clear", "cloudy", "thin_fog", "thick_fog", "light_rain", "heavy_rain", "light_snow", "heavy_snow"};
constexpr std::array<std::string_view, 4> kTimeNames{"00:00", "06:00", "12:00", "18:00"};
constexpr std::array<std::string_view, 4> kTimeCompact{"0000", "0600", "1200", "1800"};
}  // namespace

std::string_view to_string(Weather w) { return kWeatherNames[static_cast<std::size_t>(w)]; }
std::string_view to_string(TimeOfDay t) { return kTimeNames[static_cast<std::size_t>(t)]; }
std::string_view to_compact(TimeOfDay t) { return kTimeCompact[static_cast<std::size_t>(t)]; }

std::optional<Weather> parse_weather(std::string_view name) {
  for (std::size_t i = 0; i < kWeatherNames.size(); ++i) {
    if (kWeatherNames[i] == name) return static_cast<Weather>(i);
  }
  return std::nullopt;
}

std::optional<TimeOfDay> parse_time(std::string_view name) {
  for (std::size_t i = 0; i < kTimeNames.size(); ++i) {
    if (kTimeNames[i] == name || kTimeCompact[i] == name) return static_cast<TimeOfDay>(i);
  }
  return std::nullopt;
}

EnvironmentCondition condition_derive(Weather weather, TimeOfDay time, const ConditionTables& t) {
  const auto w = static_cast<std::size_t>(weather);
  const auto h = static_cast<std::size_t>(time);
  EnvironmentCondition c;
  c.weather = weather;
  c.time = time;
  c.visibility = clamp01(t.light[h] * t.weather_visibility[w]);
  c.ambient_light = clamp01(t.light[h] * t.weather_ambient[w]);
  c.fog_density = clamp01(t.weather_fog[w]);
  c.traction = t.weather_affects_traction ? t.weather_traction[w] : 1.0;
  return c;
}

}  // namespace twinforge::environment
