#include <algorithm>
#include <cmath>
#include <string>

#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

namespace {

constexpr double kContactTolerance = 0.005;  // m
// Brake capacity is evaluated at the 60 MPH reference speed it is calibrated for.
constexpr double kBrakeReferenceSpeed = 60.0 * kMphToMps;

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) throw SimulationFault(std::string("non-finite ") + what);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw SimulationFault(std::string("non-finite ") + what);
}

}  // namespace

void VehicleConfig::validate() const {
  for (const auto& m : sprung_masses) {
    if (!(m.mass > 0.0) || !m.position.allFinite()) throw ConfigError("invalid sprung mass");
  }
  for (const auto& s : suspension) {
    if (!(s.natural_frequency > 0.0) || !(s.damping_ratio >= 0.0) || !(s.equilibrium > 0.0) ||
        !(s.equilibrium < 1.0) || !(s.wheel_mass > 0.0) || !(s.wheel_radius > 0.0)) {
      throw ConfigError("invalid suspension parameters");
    }
  }
  if (powertrain.forward_ratios.empty()) throw ConfigError("powertrain needs forward gears");
  for (std::size_t i = 1; i < powertrain.torque_curve.size(); ++i) {
    if (!(powertrain.torque_curve[i].first > powertrain.torque_curve[i - 1].first)) {
      throw ConfigError("torque curve RPM must be strictly increasing");
    }
  }
  if (!(powertrain.rpm_time_constant > 0.0) || !(powertrain.tire_radius > 0.0)) {
    throw ConfigError("invalid powertrain parameters");
  }
  if (!(steering.limit > 0.0) || !(steering.limit < kPi / 2.0) || !(steering.wheelbase > 0.0) ||
      !(steering.track > 0.0) || !(steering.top_speed > 0.0)) {
    throw ConfigError("invalid steering parameters");
  }
  if (!(brake.braking_distance_60mph > 0.0) || !(brake.disk_radius > 0.0)) {
    throw ConfigError("invalid brake parameters");
  }
  if (!(aero.max_speed > 0.0) || aero.drag_idle < 0.0 || aero.drag_max < 0.0) {
    throw ConfigError("invalid aero parameters");
  }
  if (!(fixed_dt > 0.0) || !(fixed_dt <= 0.05)) throw ConfigError("fixed_dt must be in (0, 0.05]");
  if (!(front_overhang > 0.0) || !(rear_overhang > 0.0) || !(body_width > 0.0)) {
    throw ConfigError("invalid body footprint");
  }
}

VehicleModel::VehicleModel(VehicleConfig cfg) : config(std::move(cfg)) {
  config.validate();
  com = com_properties(config.sprung_masses);
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto& s = config.suspension[i];
    corner_mass[i] = config.sprung_masses[i].mass;
    mounts[i] = config.wheel_mounts[i] - com.com;
    coeffs[i] = suspension_coefficients(corner_mass[i], s.natural_frequency, s.damping_ratio);
    travel_limit[i] = suspension_displacement(corner_mass[i], coeffs[i].stiffness, s.equilibrium);
    application_depth[i] =
        force_application_height(0.0, mounts[i].z(), s.wheel_radius, s.force_offset);
    wheel_inertia[i] = 0.5 * s.wheel_mass * s.wheel_radius * s.wheel_radius;
  }
}

VehicleState make_rest_state(const VehicleModel& model,
                             const environment::TerrainHeightmap& terrain, double x, double y,
                             double yaw) {
  const Mat3 yaw_only = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  std::array<double, 4> ground{};
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const Vec3 w = yaw_only * model.mounts[i];
    ground[i] = terrain.height_at(x + w.x(), y + w.y());
  }
  const double wheelbase = model.mounts[front_left].x() - model.mounts[rear_left].x();
  const double track = model.mounts[front_left].y() - model.mounts[front_right].y();
  const double front = 0.5 * (ground[front_left] + ground[front_right]);
  const double rear = 0.5 * (ground[rear_left] + ground[rear_right]);
  const double left = 0.5 * (ground[front_left] + ground[rear_left]);
  const double right = 0.5 * (ground[front_right] + ground[rear_right]);
  const double pitch = -std::atan2(front - rear, wheelbase);
  const double roll = std::atan2(left - right, track);

  VehicleState s;
  s.pose = make_pose(Vec3(x, y, 0.0), roll, pitch, yaw);
  const Mat3 R = s.pose.linear();
  double z_sum = 0.0;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto& sp = model.config.suspension[i];
    const double rest_extension = model.travel_limit[i] * (1.0 - sp.equilibrium);
    const double wheel_z = ground[i] + sp.wheel_radius;
    z_sum += wheel_z + rest_extension - (R * model.mounts[i]).z();
    auto& w = s.wheels[i];
    w.vertical = {wheel_z, 0.0};
    w.grounded = true;
    w.attach_z = wheel_z + rest_extension;
    w.contact_z = -(rest_extension + sp.wheel_radius);
    w.travel = rest_extension / model.travel_limit[i];
    w.normal_load = (model.corner_mass[i] + sp.wheel_mass) * kGravity;
  }
  s.pose.translation().z() = z_sum / static_cast<double>(kWheelCount);
  s.powertrain.engine_rpm = model.config.powertrain.idle_rpm;
  return s;
}

void integrate_step(VehicleState& s, const VehicleModel& model,
                    const environment::TerrainHeightmap& terrain, double dt, double traction) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const auto& cfg = model.config;
  const VehicleCommand& cmd = s.command;
  const Mat3 R = s.pose.linear();
  const Vec3 p = s.pose.translation();
  const Vec3 up = R.col(2);
  const double forward_speed = (R.transpose() * s.velocity).x();
  const double total_mass = model.com.total_mass;

  // Steering: the physical wheel yaw is positive to the left.
  const auto steer = steering_step(cmd.steering, s.steering_angle, forward_speed, cfg.steering, dt);
  s.steering_angle = steer.angle;
  s.wheels[front_left].steer = -steer.left;
  s.wheels[front_right].steer = -steer.right;
  s.wheels[rear_left].steer = 0.0;
  s.wheels[rear_right].steer = 0.0;

  // Powertrain.
  const auto drive = cfg.powertrain.drive;
  std::array<bool, 4> driven{};
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const bool front = i == front_left || i == front_right;
    driven[i] = drive == DriveConfig::awd || (front == (drive == DriveConfig::fwd));
  }
  double omega_sum = 0.0;
  int n_driven = 0;
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    if (driven[i]) {
      omega_sum += s.wheels[i].omega;
      ++n_driven;
    }
  }
  const double wheel_rpm = omega_sum / n_driven * 60.0 / (2.0 * kPi);
  PowertrainInput pin;
  pin.throttle = cmd.throttle;
  pin.handbrake = cmd.handbrake;
  pin.reverse_request = cmd.reverse;
  pin.wheel_rpm = wheel_rpm;
  pin.speed = forward_speed;
  const auto pt = powertrain_step(s.powertrain, cfg.powertrain, pin, dt);
  const auto split = torque_split(pt.total_torque, drive, steer.angle, cfg.powertrain.torque_drop);
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const bool left = i == front_left || i == rear_left;
    s.wheels[i].drive_torque = driven[i] ? (left ? split.left : split.right) : 0.0;
  }

  // Brakes.
  const std::span<const double, 4> masses(model.corner_mass);
  auto service = brake_torque(masses, kBrakeReferenceSpeed, cfg.brake, BrakeType::combi);
  auto hand = brake_torque(masses, kBrakeReferenceSpeed, cfg.brake, BrakeType::handbrake);
  const double pedal = clamp01(cmd.brake);
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    s.wheels[i].brake_torque = pedal * service[i] + (cmd.handbrake ? hand[i] : 0.0);
  }

  // Aero.
  AeroInput ain;
  ain.speed = s.speed();
  ain.output_torque = split.per_wheel_nominal;
  ain.gear = pt.gear;
  ain.wheel_rpm = wheel_rpm;
  ain.angular_velocity = s.angular_velocity;
  const auto aero = aero_forces(ain, cfg.aero);
  s.aero_case = aero.which;

  Vec3 force(0.0, 0.0, -total_mass * kGravity);
  Vec3 torque = aero.angular_drag;  // body frame
  const double speed = s.velocity.norm();
  if (speed > 1e-9) {
    const double drag = std::min(aero.drag, total_mass * speed / dt);
    force -= drag * s.velocity / speed;
  }
  force -= aero.downforce * up;

  auto apply = [&](const Vec3& point_b, const Vec3& f_world) {
    force += f_world;
    torque += point_b.cross(R.transpose() * f_world);
  };

  // Suspension.
  std::array<SuspensionResult, 4> susp{};
  std::array<Vec3, 4> app{};
  std::array<environment::HeightSample, 4> ground{};
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto& sp = cfg.suspension[i];
    auto& w = s.wheels[i];
    const Vec3& mount = model.mounts[i];
    const Vec3 mount_w = p + R * mount;
    const Vec3 mount_v = s.velocity + R * s.angular_velocity.cross(mount);
    ground[i] = terrain.height_and_gradient(mount_w.x(), mount_w.y());

    SuspensionInput in;
    in.attach_z = mount_w.z();
    in.attach_rate = mount_v.z();
    in.ground_height = ground[i].height;
    in.ground_rate = ground[i].gradient.dot(mount_v.head<2>());
    in.travel_limit = model.travel_limit[i];
    in.sprung_mass = model.corner_mass[i];
    in.coeffs = model.coeffs[i];
    in.wheel_mass = sp.wheel_mass;
    in.wheel_radius = sp.wheel_radius;
    in.grounded =
        w.grounded || w.vertical.z - (ground[i].height + sp.wheel_radius) <= kContactTolerance;
    susp[i] = suspension_step(w.vertical, in, dt);

    w.vertical = susp[i].wheel;
    w.grounded = susp[i].grounded;
    w.attach_z = mount_w.z();
    w.contact_z = -(susp[i].extension + sp.wheel_radius);
    w.travel = wheel_travel(w.contact_z, sp.wheel_radius, model.travel_limit[i]);
    w.normal_load = susp[i].normal_load;

    app[i] = Vec3(mount.x(), mount.y(), -model.application_depth[i]);
    apply(app[i], susp[i].body_force * up);
  }

  for (auto [l, r] : {std::pair<std::size_t, std::size_t>{front_left, front_right},
                      {rear_left, rear_right}}) {
    const double kr = cfg.suspension[l].antiroll_stiffness;
    const auto [fl, fr] = antiroll_forces(s.wheels[l].travel, s.wheels[r].travel, kr,
                                          s.wheels[l].grounded, s.wheels[r].grounded);
    apply(app[l], fl * up);
    apply(app[r], fr * up);
  }

  // Tires and wheel spin.
  for (std::size_t i = 0; i < kWheelCount; ++i) {
    const auto& sp = cfg.suspension[i];
    auto& w = s.wheels[i];
    const double radius = sp.wheel_radius;
    const double inertia = model.wheel_inertia[i];
    double fx = 0.0;
    if (w.grounded) {
      const Vec3 n = Vec3(-ground[i].gradient.x(), -ground[i].gradient.y(), 1.0).normalized();
      const Vec3 heading = R * Vec3(std::cos(w.steer), std::sin(w.steer), 0.0);
      const Vec3 fwd = (heading - heading.dot(n) * n).normalized();
      const Vec3 lat = n.cross(fwd);
      const Vec3 vc = s.velocity + R * s.angular_velocity.cross(app[i]);
      const double vx = vc.dot(fwd);
      const double vy = vc.dot(lat);
      const auto tf = tire_forces(w.omega, vx, vy, radius, cfg.tire, w.normal_load * traction);
      w.slip_x = tf.slip_x;
      w.slip_y = tf.slip_y;

      const double m_corner = model.corner_mass[i] + sp.wheel_mass;
      // Neither force may reverse its slip velocity within one step.
      const double fy_cap = std::abs(vy) * m_corner / dt;
      const double fy = std::clamp(tf.lateral, -fy_cap, fy_cap);
      fx = tf.longitudinal;
      // A stationary wheel whose brake can hold the tire torque does not spin up.
      const bool held = w.omega == 0.0 &&
                        w.brake_torque >= std::abs(w.drive_torque - fx * radius);
      const double u_next =
          radius * w.omega - vx + (held ? 0.0 : dt * w.drive_torque * radius / inertia);
      const double compliance = (held ? 0.0 : radius * radius / inertia) + 1.0 / m_corner;
      const double fx_zero = u_next / (dt * compliance);
      if (fx * fx_zero <= 0.0) {
        fx = 0.0;
      } else if (std::abs(fx) > std::abs(fx_zero)) {
        fx = fx_zero;
      }
      apply(app[i], fx * fwd + fy * lat);
    } else {
      w.slip_x = 0.0;
      w.slip_y = 0.0;
    }

    double omega = w.omega + dt * (w.drive_torque - fx * radius) / inertia;
    const double brake_dw = dt * w.brake_torque / inertia;
    omega = std::abs(omega) <= brake_dw ? 0.0 : omega - std::copysign(brake_dw, omega);
    w.omega = omega;
    w.revolutions += omega * dt / (2.0 * kPi);
    require_finite(omega, "wheel speed");
  }

  require_finite(force, "force");
  require_finite(torque, "torque");

  // Semi-implicit Euler: velocities first, then positions with the new velocities.
  s.velocity += dt * force / total_mass;
  const Vec3& inertia = model.com.inertia;
  const Vec3 I_omega = inertia.cwiseProduct(s.angular_velocity);
  s.angular_velocity +=
      dt * (torque - s.angular_velocity.cross(I_omega)).cwiseQuotient(inertia);
  require_finite(s.velocity, "velocity");
  require_finite(s.angular_velocity, "angular velocity");

  s.pose.translation() = p + dt * s.velocity;
  const double angle = s.angular_velocity.norm() * dt;
  Quat q(R);
  if (angle > 0.0) q = q * Quat(Eigen::AngleAxisd(angle, s.angular_velocity.normalized()));
  q.normalize();
  s.pose.linear() = q.toRotationMatrix();
  require_finite(s.pose.translation(), "position");
  s.time += dt;
}

}  // namespace twinforge::dynamics
