#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

std::array<double, 4> brake_torque(std::span<const double, 4> corner_masses, double speed,
                                   const BrakeParams& p, BrakeType type) {
  if (!(p.braking_distance_60mph > 0.0)) throw ConfigError("braking distance must be positive");
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (type == BrakeType::handbrake && (i == front_left || i == front_right)) continue;
    out[i] = corner_masses[i] * speed * speed / (2.0 * p.braking_distance_60mph) * p.disk_radius;
  }
  return out;
}

}  // namespace twinforge::dynamics
