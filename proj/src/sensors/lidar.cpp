#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "twinforge/sensors.hpp"

namespace twinforge::sensors {

namespace {

double cast(const LidarConfig& c, const Pose& world_T_lidar, const environment::Scene& scene,
            const Vec3& dir_lidar, CounterRng* rng) {
  const Vec3 origin = world_T_lidar.translation();
  const Vec3 dir = world_T_lidar.linear() * dir_lidar;
  const auto hit = environment::env_raycast(scene, origin, dir, c.r_max);
  if (!hit) return std::numeric_limits<double>::infinity();
  double d = hit->distance;
  if (rng && c.noise_sigma > 0.0) d += c.noise_sigma * rng->normal();
  if (d < c.r_min || d > c.r_max) return std::numeric_limits<double>::infinity();
  return d;
}

}  // namespace

void LidarConfig::validate() const {
  if (!(r_min >= 0.0) || !(r_max > r_min)) throw ConfigError("lidar needs 0 <= r_min < r_max");
  if (!(theta_res > 0.0) || !(theta_max >= theta_min)) throw ConfigError("invalid lidar azimuth grid");
  if (mode == LidarMode::spatial && (!(phi_res > 0.0) || !(phi_max >= phi_min))) {
    throw ConfigError("invalid lidar elevation grid");
  }
  if (!(rate > 0.0)) throw ConfigError("lidar rate must be positive");
}

std::size_t grid_count(double lo, double hi, double res) {
  return static_cast<std::size_t>(std::floor((hi - lo) / res + 1e-9)) + 1;
}

std::vector<double> lidar_scan_2d(const LidarConfig& c, const Pose& world_T_lidar,
                                  const environment::Scene& scene, CounterRng* rng) {
  c.validate();
  const std::size_t n = grid_count(c.theta_min, c.theta_max, c.theta_res);
  std::vector<double> ranges(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = c.theta_min + static_cast<double>(i) * c.theta_res;
    ranges[i] = cast(c, world_T_lidar, scene, Vec3(std::cos(theta), std::sin(theta), 0.0), rng);
  }
  return ranges;
}

PointCloud lidar_scan_3d(const LidarConfig& c, const Pose& world_T_lidar,
                         const environment::Scene& scene, CounterRng* rng) {
  if (c.mode != LidarMode::spatial) throw ConfigError("3D scan needs a spatial lidar");
  c.validate();
  PointCloud pc;
  pc.channels = grid_count(c.phi_min, c.phi_max, c.phi_res);
  pc.rays = grid_count(c.theta_min, c.theta_max, c.theta_res);
  pc.points.reserve(pc.channels * pc.rays);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ch = 0; ch < pc.channels; ++ch) {
    const double phi = c.phi_min + static_cast<double>(ch) * c.phi_res;
    for (std::size_t i = 0; i < pc.rays; ++i) {
      const double theta = c.theta_min + static_cast<double>(i) * c.theta_res;
      const Vec3 dir(std::cos(theta) * std::cos(phi), std::sin(theta) * std::cos(phi),
                     -std::sin(phi));
      const double d = cast(c, world_T_lidar, scene, dir, rng);
      pc.points.push_back(std::isfinite(d) ? Vec3(d * dir) : Vec3(nan, nan, nan));
    }
  }
  return pc;
}

std::vector<std::uint8_t> PointCloud::encode() const {
  std::vector<std::uint8_t> out(points.size() * 12);
  std::size_t k = 0;
  for (const auto& p : points) {
    for (int a = 0; a < 3; ++a) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(p[a]));
      for (int b = 0; b < 4; ++b) out[k++] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
  }
  return out;
}

std::string PointCloud::ascii() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  for (const auto& p : points) {
    if (std::isnan(p.x())) continue;
    os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  return os.str();
}

double min_range_in_sector(const LidarConfig& c, const std::vector<double>& ranges,
                           double half_angle) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const double theta = c.theta_min + static_cast<double>(i) * c.theta_res;
    if (std::abs(theta) <= half_angle + 1e-12) best = std::min(best, ranges[i]);
  }
  return best;
}

}  // namespace twinforge::sensors
