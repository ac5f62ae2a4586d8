#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twinforge/common.hpp"

namespace twinforge::environment {

struct HeightSample {
  double height = 0.0;
  Vec2 gradient = Vec2::Zero();  // (dz/dx, dz/dy)
};

/// Regular-grid heightmap with bilinear interpolation. Row-major, x fastest.
class TerrainHeightmap {
 public:
  TerrainHeightmap() = default;
  TerrainHeightmap(std::size_t nx, std::size_t ny, double cell_size, Vec2 origin,
                   std::vector<double> heights);

  static TerrainHeightmap flat(double height, double length, double width, double cell_size,
                               Vec2 origin);
  /// z = z0 + sx*(x - origin.x) + sy*(y - origin.y) sampled on the grid.
  static TerrainHeightmap plane(double z0, double slope_x, double slope_y, double length,
                                double width, double cell_size, Vec2 origin);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double cell_size() const { return cell_; }
  const Vec2& origin() const { return origin_; }
  Vec2 max_corner() const;
  double node(std::size_t ix, std::size_t iy) const { return heights_[iy * nx_ + ix]; }
  bool contains(double x, double y) const;

  /// Bilinear height and the analytic gradient of the containing patch.
  /// Throws QueryError outside the grid.
  HeightSample height_and_gradient(double x, double y) const;
  double height_at(double x, double y) const { return height_and_gradient(x, y).height; }

  /// First intersection of origin + t*dir (t in [0, max_distance]) with the surface.
  /// Walks the grid cell by cell and solves the ray/bilinear-patch equation exactly
  /// in each cell, so thin ridges cannot be skipped.
  std::optional<double> raycast(const Vec3& origin, const Vec3& dir, double max_distance) const;

  std::size_t memory_bytes() const { return heights_.size() * sizeof(double); }

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  double cell_ = 1.0;
  Vec2 origin_ = Vec2::Zero();
  std::vector<double> heights_;
};

/// Parameters of the procedural dirt-road corridor.
struct CorridorSpec {
  std::uint64_t seed = 7;
  double length = 4000.0;
  double width = 40.0;
  double cell_size = 1.0;
  double base_height = 0.0;
  // Dominant rolling wave: crest at crest_x, steepest uphill a quarter wavelength before it.
  double wavelength = 200.0;
  double max_grade_deg = 4.0;
  double crest_x = 335.0;
  // Seeded secondary undulation.
  int detail_waves = 3;
  double detail_grade_deg = 0.8;
};

/// Builds a corridor along +x (y-invariant), grade bounded by
/// max_grade_deg + detail_grade_deg.
TerrainHeightmap make_corridor(const CorridorSpec& corridor);

/// Box obstacle (axis-aligned in its own frame).
struct Obstacle {
  int id = 0;
  std::string label = "moose";
  Pose pose = Pose::Identity();  // box center
  Vec3 half_extents{0.4, 1.25, 1.05};
  bool dynamic = true;
  double mass = 450.0;
};

/// Slab test of a ray against an obstacle box. Returns entry distance (0 if inside).
std::optional<double> ray_box(const Obstacle& box, const Vec3& origin, const Vec3& dir,
                              double max_distance);

struct RayHit {
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  std::optional<int> obstacle_id;
};

/// Terrain plus obstacles. Obstacles are copied per episode so dynamic ones can move.
struct Scene {
  TerrainHeightmap terrain;
  std::vector<Obstacle> obstacles;
  bool has_terrain = true;
};

/// Nearest hit among terrain and obstacle boxes, or nullopt beyond r_max.
std::optional<RayHit> env_raycast(const Scene& scene, const Vec3& origin, const Vec3& direction,
                                  double r_max);

enum class Weather {
  clear,
  cloudy,
  thin_fog,
  thick_fog,
  light_rain,
  heavy_rain,
  light_snow,
  heavy_snow
};
enum class TimeOfDay { t0000, t0600, t1200, t1800 };

inline constexpr std::array<Weather, 8> kAllWeathers{
    Weather::clear,      Weather::cloudy,     Weather::thin_fog,   Weather::thick_fog,
    Weather::light_rain, Weather::heavy_rain, Weather::light_snow, Weather::heavy_snow};
inline constexpr std::array<TimeOfDay, 4> kAllTimes{TimeOfDay::t0000, TimeOfDay::t0600,
                                                    TimeOfDay::t1200, TimeOfDay::t1800};

std::string_view to_string(Weather w);
std::string_view to_string(TimeOfDay t);
/// "HHMM" form used inside case ids.
std::string_view to_compact(TimeOfDay t);
/// Accepts the canonical names, e.g. "thick_fog" / "06:00" / "0600".
std::optional<Weather> parse_weather(std::string_view name);
std::optional<TimeOfDay> parse_time(std::string_view name);

/// Visibility tables; non-authoritative defaults chosen to span the detection range.
struct ConditionTables {
  std::array<double, 8> weather_visibility{1.0, 0.9, 0.6, 0.25, 0.8, 0.5, 0.75, 0.45};
  std::array<double, 8> weather_ambient{1.0, 0.8, 0.85, 0.7, 0.8, 0.65, 0.9, 0.75};
  std::array<double, 8> weather_fog{0.0, 0.0, 0.4, 0.85, 0.1, 0.3, 0.15, 0.35};
  std::array<double, 4> light{0.15, 0.45, 1.0, 0.7};
  // Optional traction scaling for rain/snow; off unless enabled.
  bool weather_affects_traction = false;
  std::array<double, 8> weather_traction{1.0, 1.0, 1.0, 1.0, 0.85, 0.7, 0.75, 0.6};
};

struct EnvironmentCondition {
  Weather weather = Weather::clear;
  TimeOfDay time = TimeOfDay::t1200;
  double visibility = 1.0;
  double ambient_light = 1.0;
  double fog_density = 0.0;
  double traction = 1.0;
};

EnvironmentCondition condition_derive(Weather weather, TimeOfDay time,
                                      const ConditionTables& tables = {});

enum class TerrainKind { corridor, flat };

/// Episode scenario: terrain, obstacles, ego spawn and episode limits. Versioned JSON.
struct Scenario {
  int schema_version = 1;
  TerrainKind terrain_kind = TerrainKind::corridor;
  CorridorSpec corridor;
  // Obstacle poses are given as (x, y, yaw); z is snapped so the box rests on the ground.
  std::vector<Obstacle> obstacles{Obstacle{1, "moose", make_pose(Vec3(300.0, 0.0, 0.0), 0, 0, 0),
                                           Vec3(0.4, 1.25, 1.05), true, 450.0}};
  double ego_x = 120.0;
  double ego_y = 0.0;
  double ego_yaw = 0.0;
  double cruise_speed = 11.1;  // m/s
  double post_stop_window = 5.0;  // s simulated after an AEB stop
  double collision_standstill = 1.0;  // s at rest after a collision
  double t_max = 120.0;  // s
  Weather weather = Weather::clear;
  TimeOfDay time = TimeOfDay::t1200;
  ConditionTables tables;
};

Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& scenario);

/// Builds the terrain and places the obstacles on it.
Scene build_scene(const Scenario& scenario);

}  // namespace twinforge::environment
