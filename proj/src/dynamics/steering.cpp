#include <algorithm>
#include <cmath>

#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

std::pair<double, double> ackermann_angles(double angle, double wheelbase, double track) {
  const double t = std::tan(angle);
  const double l2 = 2.0 * wheelbase;
  return {std::atan(l2 * t / (l2 + track * t)), std::atan(l2 * t / (l2 - track * t))};
}

SteeringOutput steering_step(double command, double current_angle, double speed,
                             const SteeringParams& p, double dt) {
  const double target = std::clamp(command, -1.0, 1.0) * p.limit;
  const double rate =
      std::max(1e-3, p.sensitivity + p.speed_factor * std::min(std::abs(speed) / p.top_speed, 1.0));
  const double max_step = rate * dt;
  SteeringOutput out;
  out.angle = std::clamp(current_angle + std::clamp(target - current_angle, -max_step, max_step),
                         -p.limit, p.limit);
  std::tie(out.left, out.right) = ackermann_angles(out.angle, p.wheelbase, p.track);
  return out;
}

}  // namespace twinforge::dynamics
