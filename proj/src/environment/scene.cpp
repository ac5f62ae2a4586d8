#include <algorithm>
#include <cmath>
#include <limits>

#include "twinforge/environment.hpp"

namespace twinforge::environment {

std::optional<double> ray_box(const Obstacle& box, const Vec3& origin, const Vec3& dir,
                              double max_distance) {
  const Pose inv = box.pose.inverse();
  const Vec3 o = inv * origin;
  const Vec3 d = inv.linear() * dir;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = -box.half_extents[a];
    const double hi = box.half_extents[a];
    if (d[a] == 0.0) {
      if (o[a] < lo || o[a] > hi) return std::nullopt;
      continue;
    }
    double t0 = (lo - o[a]) / d[a];
    double t1 = (hi - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_far < 0.0) return std::nullopt;
  const double t = std::max(t_near, 0.0);
  if (t > max_distance) return std::nullopt;
  return t;
}

std::optional<RayHit> env_raycast(const Scene& scene, const Vec3& origin, const Vec3& direction,
                                  double r_max) {
  std::optional<RayHit> best;
  if (scene.has_terrain) {
    if (auto t = scene.terrain.raycast(origin, direction, r_max)) {
      best = RayHit{origin + *t * direction, *t, std::nullopt};
    }
  }
  for (const auto& ob : scene.obstacles) {
    const double limit = best ? best->distance : r_max;
    if (auto t = ray_box(ob, origin, direction, limit)) {
      if (!best || *t < best->distance) best = RayHit{origin + *t * direction, *t, ob.id};
    }
  }
  return best;
}

}  // namespace twinforge::environment
