#include <cmath>

#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

SuspensionCoefficients suspension_coefficients(double sprung_mass, double natural_frequency,
                                               double damping_ratio) {
  if (!(sprung_mass > 0.0)) throw ConfigError("sprung mass must be positive");
  if (!(natural_frequency > 0.0)) throw ConfigError("natural frequency must be positive");
  if (!(damping_ratio >= 0.0)) throw ConfigError("damping ratio must be nonnegative");
  SuspensionCoefficients c;
  c.stiffness = sprung_mass * natural_frequency * natural_frequency;
  c.damping = 2.0 * damping_ratio * std::sqrt(c.stiffness * sprung_mass);
  return c;
}

double suspension_displacement(double sprung_mass, double stiffness, double equilibrium) {
  if (!(equilibrium > 0.0) || !(stiffness > 0.0)) {
    throw ConfigError("suspension equilibrium and stiffness must be positive");
  }
  return sprung_mass * kGravity / (equilibrium * stiffness);
}

double force_application_height(double com_z, double wheel_mount_z, double wheel_radius,
                                double force_offset) {
  return com_z - wheel_mount_z + wheel_radius - force_offset;
}

SuspensionResult suspension_step(const WheelVertical& wheel, const SuspensionInput& in, double dt) {
  SuspensionResult out;
  const double m = in.wheel_mass;

  if (in.grounded) {
    const double extension = in.attach_z - wheel.z;
    out.body_force = in.coeffs.stiffness * (in.travel_limit - extension) +
                     in.coeffs.damping * (wheel.z_rate - in.attach_rate);
  }

  double rate = wheel.z_rate + dt * (-out.body_force / m - kGravity);
  double z = wheel.z + dt * rate;

  // Droop stop: the wheel hangs from the mount at full extension.
  if (in.attach_z - z > in.travel_limit) {
    z = in.attach_z - in.travel_limit;
    rate = in.attach_rate;
  }

  const double floor = in.ground_height + in.wheel_radius;
  if (z <= floor) {
    if (rate < in.ground_rate) {
      out.normal_load = m * (in.ground_rate - rate) / dt;
      rate = in.ground_rate;
    }
    z = floor;
    out.grounded = true;
  }
  out.wheel = {z, rate};
  out.extension = in.attach_z - z;
  return out;
}

double wheel_travel(double contact_z, double wheel_radius, double travel_limit) {
  return (-contact_z - wheel_radius) / travel_limit;
}

std::pair<double, double> antiroll_forces(double travel_left, double travel_right, double kr,
                                          bool grounded_left, bool grounded_right) {
  const double left = grounded_left ? kr * (travel_right - travel_left) : 0.0;
  const double right = grounded_right ? kr * (travel_left - travel_right) : 0.0;
  return {left, right};
}

}  // namespace twinforge::dynamics
