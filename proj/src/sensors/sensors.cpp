#include <cmath>

#include "twinforge/sensors.hpp"

namespace twinforge::sensors {

ActuatorFeedback actuator_feedback(const dynamics::VehicleState& state) {
  const auto& c = state.command;
  return {c.throttle, c.steering, c.brake, c.handbrake ? 1.0 : 0.0};
}

std::int64_t encoder_ticks(const EncoderConfig& config, double revolutions, CounterRng* rng) {
  if (config.ppr < 1) throw ConfigError("encoder PPR must be at least 1");
  if (!(config.cumulative_gear_ratio > 0.0)) throw ConfigError("encoder CGR must be positive");
  double pulses = static_cast<double>(config.ppr) * config.cumulative_gear_ratio * revolutions;
  if (rng && config.noise_sigma > 0.0) pulses += config.noise_sigma * rng->normal();
  return static_cast<std::int64_t>(std::floor(pulses));
}

InsReading ins_read(const dynamics::VehicleState& current, const dynamics::VehicleState* previous,
                    double dt, const InsConfig& config, CounterRng* rng) {
  InsReading r;
  const Mat3 R = current.pose.linear();
  r.position = current.pose.translation();
  r.quaternion = Quat(R).normalized();
  if (r.quaternion.w() < 0.0) r.quaternion.coeffs() *= -1.0;
  r.euler = euler_from_rotation(R);
  Vec3 world_accel = Vec3::Zero();
  if (previous && dt > 0.0) world_accel = (current.velocity - previous->velocity) / dt;
  r.linear_accel = R.transpose() * (world_accel + Vec3(0.0, 0.0, kGravity));
  r.angular_vel = current.angular_velocity;
  if (rng) {
    auto jitter = [&](Vec3& v, double sigma) {
      if (sigma > 0.0) {
        for (int i = 0; i < 3; ++i) v[i] += sigma * rng->normal();
      }
    };
    jitter(r.linear_accel, config.accel_noise_sigma);
    jitter(r.angular_vel, config.gyro_noise_sigma);
    jitter(r.position, config.position_noise_sigma);
  }
  return r;
}

}  // namespace twinforge::sensors
