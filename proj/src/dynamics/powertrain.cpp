#include <algorithm>
#include <cmath>

#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

namespace {
constexpr double kStandstill = 0.05;  // m/s
constexpr double kMetersPerInch = 0.0254;
}  // namespace

int Gear::code() const {
  switch (mode) {
    case GearMode::park: return -2;
    case GearMode::reverse: return -1;
    case GearMode::neutral: return 0;
    case GearMode::drive: return index;
  }
  return 0;
}

double engine_torque(const PowertrainParams& p, double rpm) {
  const auto& curve = p.torque_curve;
  if (curve.empty()) return 0.0;
  if (rpm <= curve.front().first) return curve.front().second;
  if (rpm >= curve.back().first) return curve.back().second;
  auto hi = std::upper_bound(curve.begin(), curve.end(), rpm,
                             [](double r, const auto& pt) { return r < pt.first; });
  auto lo = hi - 1;
  const double u = (rpm - lo->first) / (hi->first - lo->first);
  return lo->second + u * (hi->second - lo->second);
}

double gear_ratio(const PowertrainParams& p, const Gear& gear) {
  switch (gear.mode) {
    case GearMode::drive:
      if (gear.index < 1 || gear.index > static_cast<int>(p.forward_ratios.size())) return 0.0;
      return p.forward_ratios[static_cast<std::size_t>(gear.index - 1)];
    case GearMode::reverse: return -p.reverse_ratio;
    default: return 0.0;
  }
}

double throttle_gain(double throttle, double gain) { return 1.0 + gain * throttle * throttle; }

double transmission_map_rpm(double speed_mps, double tire_radius_m, double final_drive,
                            double ratio) {
  const double mph = std::abs(speed_mps) / kMphToMps;
  const double radius_in = tire_radius_m / kMetersPerInch;
  const double wheel_rpm = mph * 5280.0 * 12.0 / (60.0 * 2.0 * kPi * radius_in);
  return wheel_rpm * final_drive * std::abs(ratio);
}

PowertrainOutput powertrain_step(PowertrainState& state, const PowertrainParams& p,
                                 const PowertrainInput& in, double dt) {
  const double throttle = clamp01(in.throttle);
  const bool at_rest = std::abs(in.speed) < kStandstill;
  const Gear neutral{GearMode::neutral, 0};

  if (state.shift_timer > 0.0) state.shift_timer = std::max(0.0, state.shift_timer - dt);

  Gear next = state.gear;
  if (state.shift_timer <= 0.0) {
    const Gear g = state.gear;
    if (throttle <= 0.0) {
      if (at_rest) {
        next = in.handbrake ? Gear{GearMode::park, 0} : neutral;
        // Park is entered from neutral only.
        if (next.mode == GearMode::park && g.mode != GearMode::neutral && g.mode != GearMode::park) {
          next = neutral;
        }
      }
    } else if (in.reverse_request) {
      if (g.mode == GearMode::drive || g.mode == GearMode::park) {
        next = neutral;
      } else if (g.mode == GearMode::neutral && in.speed <= kStandstill) {
        next = {GearMode::reverse, 0};
      }
    } else {
      if (g.mode == GearMode::reverse || g.mode == GearMode::park) {
        next = neutral;
      } else if (g.mode == GearMode::neutral) {
        next = {GearMode::drive, 1};
      } else {
        const double rpm_here =
            transmission_map_rpm(in.speed, p.tire_radius, p.final_drive, gear_ratio(p, g));
        const int top = static_cast<int>(p.forward_ratios.size());
        if (rpm_here > p.shift_up_rpm && g.index < top) {
          next = {GearMode::drive, g.index + 1};
        } else if (rpm_here < p.shift_down_rpm && g.index > 1) {
          const double rpm_lower = transmission_map_rpm(in.speed, p.tire_radius, p.final_drive,
                                                        gear_ratio(p, {GearMode::drive, g.index - 1}));
          if (rpm_lower < p.shift_up_rpm) next = {GearMode::drive, g.index - 1};
        }
      }
    }
  }
  if (!(next == state.gear)) {
    state.gear = next;
    state.shift_timer = p.shift_duration;
  }

  const double ratio = gear_ratio(p, state.gear);
  const double target = p.idle_rpm + std::abs(in.wheel_rpm) * p.final_drive * std::abs(ratio);
  const double alpha = std::min(1.0, dt / p.rpm_time_constant);
  state.engine_rpm += alpha * (target - state.engine_rpm);
  state.engine_rpm = std::max(state.engine_rpm, 0.0);

  PowertrainOutput out;
  out.engine_rpm = state.engine_rpm;
  out.gear = state.gear;
  out.shifting = state.shift_timer > 0.0;
  if (!out.shifting && ratio != 0.0) {
    out.total_torque = engine_torque(p, state.engine_rpm) * ratio * p.final_drive * throttle *
                       throttle_gain(throttle, p.smoothing_gain);
  }
  return out;
}

WheelTorques torque_split(double total_torque, DriveConfig drive, double steering_angle,
                          double torque_drop) {
  WheelTorques out;
  out.per_wheel_nominal = total_torque / (drive == DriveConfig::awd ? 4.0 : 2.0);
  const double drop_left = std::clamp(torque_drop * std::max(-steering_angle, 0.0), 0.0, 0.9);
  const double drop_right = std::clamp(torque_drop * std::max(steering_angle, 0.0), 0.0, 0.9);
  out.left = out.per_wheel_nominal * (1.0 - drop_left);
  out.right = out.per_wheel_nominal * (1.0 - drop_right);
  return out;
}

}  // namespace twinforge::dynamics
