#include <cmath>

#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

AeroOutput aero_forces(const AeroInput& in, const AeroParams& p) {
  AeroOutput out;
  const double speed = std::abs(in.speed);
  if (speed >= p.max_speed) {
    out.which = AeroCase::top_speed;
    out.drag = p.drag_max;
  } else if (in.output_torque == 0.0) {
    out.which = AeroCase::idle;
    out.drag = p.drag_idle;
  } else if (in.gear.mode == GearMode::reverse && in.wheel_rpm < 0.0 && speed >= p.reverse_speed) {
    out.which = AeroCase::reverse_overspeed;
    out.drag = p.drag_reverse;
  } else {
    out.which = AeroCase::nominal;
    out.drag = p.drag_idle;
  }
  out.angular_drag = -p.angular_drag * in.angular_velocity;
  out.downforce = p.downforce_coeff * speed;
  return out;
}

}  // namespace twinforge::dynamics
