#include <cmath>
#include <random>

#include "doctest.h"
#include "twinforge/dynamics.hpp"

using namespace twinforge;
using namespace twinforge::dynamics;
using doctest::Approx;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

environment::TerrainHeightmap flat_ground() {
  return environment::TerrainHeightmap::flat(0.0, 400.0, 60.0, 1.0, Vec2(-200.0, -30.0));
}

}  // namespace

TEST_CASE("com of a single point mass") {
  std::vector<SprungMass> m{{100.0, Vec3::Zero()}};
  const auto c = com_properties(m);
  CHECK(c.total_mass == 100.0);
  CHECK(c.com.norm() == 0.0);
  CHECK(c.inertia.norm() == 0.0);
}

TEST_CASE("com of two symmetric masses") {
  std::vector<SprungMass> m{{50.0, Vec3(1, 0, 0)}, {50.0, Vec3(-1, 0, 0)}};
  const auto c = com_properties(m);
  CHECK(c.total_mass == 100.0);
  CHECK(c.com.norm() == Approx(0.0));
  CHECK(c.inertia.y() == Approx(100.0));
  CHECK(c.inertia.z() == Approx(100.0));
  CHECK(c.inertia.x() == Approx(0.0));
}

TEST_CASE("com balances unequal masses") {
  std::vector<SprungMass> m{{60.0, Vec3(2, 0, 0)}, {40.0, Vec3(-3, 0, 0)}};
  CHECK(com_properties(m).com.x() == Approx(0.0));
}

TEST_CASE("com rejects empty sets and nonpositive masses") {
  std::vector<SprungMass> none;
  CHECK_THROWS_AS(com_properties(none), ConfigError);
  std::vector<SprungMass> bad{{0.0, Vec3::Zero()}};
  CHECK_THROWS_AS(com_properties(bad), ConfigError);
}

TEST_CASE("suspension coefficient examples") {
  auto c = suspension_coefficients(1.0, 1.0, 0.0);
  CHECK(c.stiffness == 1.0);
  CHECK(c.damping == 0.0);
  c = suspension_coefficients(1000.0, 2.0 * kPi, 0.5);
  CHECK(c.stiffness == Approx(39478.4176).epsilon(1e-8));
  CHECK(c.damping == Approx(6283.1853).epsilon(1e-8));
  c = suspension_coefficients(500.0, 8.0, 1.0);
  CHECK(c.stiffness == 32000.0);
  CHECK(c.damping == Approx(8000.0).epsilon(1e-12));
  CHECK_THROWS_AS(suspension_coefficients(0.0, 1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(suspension_coefficients(1.0, 0.0, 0.1), ConfigError);
}

TEST_CASE("damping squared equals 4 zeta^2 K M for random parameters") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> mass(1.0, 5000.0), freq(0.1, 40.0), zeta(0.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double m = mass(gen), w = freq(gen), z = zeta(gen);
    const auto c = suspension_coefficients(m, w, z);
    const double lhs = c.damping * c.damping;
    const double rhs = 4.0 * z * z * c.stiffness * m;
    if (rhs == 0.0) {
      CHECK(lhs == 0.0);
    } else {
      CHECK(rel_err(lhs, rhs) < 1e-9);
    }
  }
}

TEST_CASE("suspension travel from the equilibrium fraction") {
  CHECK(suspension_displacement(1000.0, 39478.4, 1.0) == Approx(9810.0 / 39478.4).epsilon(1e-12));
  CHECK(suspension_displacement(1000.0, 39478.4, 1.0) == Approx(0.2485).epsilon(1e-3));
}

TEST_CASE("force application height") {
  CHECK(force_application_height(0.5, -0.1, 0.41, 0.21) == Approx(0.8));
}

TEST_CASE("static suspension equilibrium carries the sprung weight") {
  const double M = 350.0;
  const auto c = suspension_coefficients(M, 7.54, 0.35);
  const double Zs = suspension_displacement(M, c.stiffness, 0.45);
  SuspensionInput in;
  in.attach_z = 1.0;
  in.travel_limit = Zs;
  in.sprung_mass = M;
  in.coeffs = c;
  in.wheel_mass = 20.0;
  in.wheel_radius = 0.4;
  in.grounded = true;
  in.ground_height = -10.0;
  const WheelVertical w{in.attach_z - (Zs - M * kGravity / c.stiffness), 0.0};
  const auto r = suspension_step(w, in, 0.01);
  CHECK(r.body_force == Approx(M * kGravity).epsilon(1e-12));
}

TEST_CASE("airborne wheel exerts no force and falls freely") {
  SuspensionInput in;
  in.attach_z = 5.0;
  in.travel_limit = 0.4;
  in.coeffs = suspension_coefficients(300.0, 7.0, 0.3);
  in.wheel_mass = 20.0;
  in.wheel_radius = 0.4;
  in.grounded = false;
  in.ground_height = 0.0;
  const WheelVertical w{4.8, 0.0};
  const auto r = suspension_step(w, in, 0.01);
  CHECK(r.body_force == 0.0);
  CHECK(r.wheel.z_rate == Approx(-kGravity * 0.01));
  CHECK_FALSE(r.grounded);
}

TEST_CASE("anti-roll forces") {
  auto [l, r] = antiroll_forces(0.2, 0.2, 1000.0, true, true);
  CHECK(l == 0.0);
  CHECK(r == 0.0);
  std::tie(l, r) = antiroll_forces(0.1, 0.3, 1000.0, true, true);
  CHECK(l == Approx(200.0));
  CHECK(r == Approx(-200.0));
  std::tie(l, r) = antiroll_forces(0.1, 0.3, 1000.0, false, true);
  CHECK(l == 0.0);
  CHECK(r == Approx(-200.0));
  CHECK(wheel_travel(-0.6, 0.4, 0.5) == Approx(0.4));
}

TEST_CASE("transmission map hand value") {
  const double v = 60.0 * kMphToMps;
  const double rpm = transmission_map_rpm(v, 15.75 * 0.0254, 4.0, 1.0);
  const double expected = (60.0 * 5280.0 * 12.0) / (60.0 * 2.0 * kPi * 15.75) * 4.0;
  CHECK(rel_err(rpm, expected) < 1e-6);
  CHECK(rpm == Approx(2561.0).epsilon(1e-3));
  CHECK(transmission_map_rpm(0.0, 0.4, 3.0, 2.0) == 0.0);
}

TEST_CASE("powertrain at standstill idles in neutral") {
  PowertrainParams p;
  PowertrainState s;
  s.gear = {GearMode::drive, 1};
  PowertrainInput in;
  PowertrainOutput out;
  for (int i = 0; i < 500; ++i) out = powertrain_step(s, p, in, 0.01);
  CHECK(out.gear.mode == GearMode::neutral);
  CHECK(out.engine_rpm == Approx(p.idle_rpm).epsilon(1e-6));
  CHECK(out.total_torque == 0.0);
}

TEST_CASE("zero throttle gives zero torque at any rpm") {
  PowertrainParams p;
  for (double rpm : {0.0, 1200.0, 3000.0, 7000.0, 9000.0}) {
    PowertrainState s;
    s.gear = {GearMode::drive, 2};
    s.engine_rpm = rpm;
    PowertrainInput in;
    in.throttle = 0.0;
    in.speed = 8.0;
    in.wheel_rpm = 8.0 / p.tire_radius * 60.0 / (2.0 * kPi);
    CHECK(powertrain_step(s, p, in, 0.01).total_torque == 0.0);
  }
}

TEST_CASE("gear state machine: park needs handbrake at standstill and reverse passes neutral") {
  PowertrainParams p;
  PowertrainState s;
  PowertrainInput in;
  in.handbrake = true;
  for (int i = 0; i < 3; ++i) powertrain_step(s, p, in, 0.01);
  CHECK(s.gear.mode == GearMode::park);

  s = PowertrainState{};
  in = PowertrainInput{};
  in.throttle = 0.5;
  powertrain_step(s, p, in, 0.01);
  CHECK(s.gear.mode == GearMode::drive);

  in.reverse_request = true;
  Gear prev = s.gear;
  bool saw_neutral = false;
  for (int i = 0; i < 200; ++i) {
    const auto out = powertrain_step(s, p, in, 0.01);
    if (out.gear.mode == GearMode::neutral) saw_neutral = true;
    if (out.gear.mode == GearMode::reverse) CHECK(prev.mode != GearMode::drive);
    prev = out.gear;
  }
  CHECK(saw_neutral);
  CHECK(s.gear.mode == GearMode::reverse);
}

TEST_CASE("no torque is delivered during a shift") {
  PowertrainParams p;
  PowertrainState s;
  s.gear = {GearMode::drive, 1};
  s.engine_rpm = 6000.0;
  PowertrainInput in;
  in.throttle = 1.0;
  const double v = 32.0;
  in.speed = v;
  in.wheel_rpm = v / p.tire_radius * 60.0 / (2.0 * kPi);
  const auto out = powertrain_step(s, p, in, 0.01);
  REQUIRE(out.shifting);
  CHECK(out.total_torque == 0.0);
  CHECK(out.gear.index == 2);
}

TEST_CASE("torque split examples and clamp") {
  auto t = torque_split(400.0, DriveConfig::awd, 0.0, 0.8);
  CHECK(t.per_wheel_nominal == 100.0);
  CHECK(t.left == 100.0);
  CHECK(t.right == 100.0);
  t = torque_split(400.0, DriveConfig::rwd, 0.0, 0.8);
  CHECK(t.per_wheel_nominal == 200.0);
  t = torque_split(400.0, DriveConfig::awd, 1.5, 0.8);  // drop 1.2 -> 0.9
  CHECK(t.right == Approx(10.0).epsilon(1e-15));
  CHECK(t.left == 100.0);
  CHECK(1.0 - t.right / t.per_wheel_nominal == Approx(0.9).epsilon(1e-15));
  t = torque_split(400.0, DriveConfig::awd, -1.5, 0.8);
  CHECK(t.left == Approx(10.0).epsilon(1e-15));
}

TEST_CASE("torque split never exceeds the nominal pair") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> tq(-1000.0, 1000.0), st(-1.0, 1.0), dr(0.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const double total = tq(gen), delta = st(gen), drop = dr(gen);
    const auto t = torque_split(total, DriveConfig::awd, delta, drop);
    const double nominal = std::abs(t.per_wheel_nominal);
    CHECK(std::abs(t.left) + std::abs(t.right) <= 2.0 * nominal + 1e-9);
    const double dl = nominal > 0 ? 1.0 - t.left / t.per_wheel_nominal : 0.0;
    const double dr_ = nominal > 0 ? 1.0 - t.right / t.per_wheel_nominal : 0.0;
    CHECK(dl >= -1e-12);
    CHECK(dl <= 0.9 + 1e-12);
    CHECK(dr_ >= -1e-12);
    CHECK(dr_ <= 0.9 + 1e-12);
  }
}

TEST_CASE("ackermann values") {
  auto [l, r] = ackermann_angles(0.0, 2.5, 1.5);
  CHECK(l == 0.0);
  CHECK(r == 0.0);
  std::tie(l, r) = ackermann_angles(0.2, 2.5, 1.5);
  const double t = std::tan(0.2);
  CHECK(std::abs(l - std::atan(2 * 2.5 * t / (2 * 2.5 + 1.5 * t))) < 1e-12);
  CHECK(std::abs(r - std::atan(2 * 2.5 * t / (2 * 2.5 - 1.5 * t))) < 1e-12);
  CHECK(l == Approx(0.1888).epsilon(1e-3));
  CHECK(r == Approx(0.2126).epsilon(1e-3));
}

TEST_CASE("ackermann ordering and oddness") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ang(1e-4, 0.6), len(1.0, 4.0), wid(0.5, 2.0);
  for (int i = 0; i < 10000; ++i) {
    const double d = ang(gen), l = len(gen), w = wid(gen);
    const auto [dl, dr] = ackermann_angles(d, l, w);
    CHECK(dr > d);
    CHECK(d > dl);
    const auto [nl, nr] = ackermann_angles(-d, l, w);
    CHECK(nl == Approx(-dr).epsilon(1e-12));
    CHECK(nr == Approx(-dl).epsilon(1e-12));
  }
}

TEST_CASE("steering saturates at its limit and slews at its rate") {
  SteeringParams p;
  double angle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    angle = steering_step(1.5, angle, 0.0, p, 0.01).angle;
    CHECK(std::abs(angle) <= p.limit + 1e-15);
  }
  CHECK(angle == Approx(p.limit));
  const auto one = steering_step(1.0, 0.0, 0.0, p, 0.01);
  CHECK(one.angle == Approx(p.sensitivity * 0.01));
}

TEST_CASE("brake torque hand value and handbrake") {
  const std::array<double, 4> masses{500.0, 500.0, 500.0, 500.0};
  BrakeParams p;
  p.braking_distance_60mph = 18.0;
  p.disk_radius = 0.15;
  auto t = brake_torque(masses, 26.82, p, BrakeType::combi);
  CHECK(rel_err(t[0], 500.0 * 26.82 * 26.82 / 36.0 * 0.15) < 1e-6);
  CHECK(t[0] == Approx(1498.6).epsilon(1e-4));
  t = brake_torque(masses, 0.0, p, BrakeType::combi);
  for (double v : t) CHECK(v == 0.0);
  t = brake_torque(masses, 20.0, p, BrakeType::handbrake);
  CHECK(t[front_left] == 0.0);
  CHECK(t[front_right] == 0.0);
  CHECK(t[rear_left] > 0.0);
  CHECK(t[rear_right] > 0.0);
}

TEST_CASE("friction spline knots, continuity and monotone rise") {
  const auto s = TireFrictionSpline::fit({0.0, 0.0}, {0.2, 1.0}, {0.8, 0.6});
  CHECK(s(0.0) == Approx(0.0).epsilon(1e-12));
  CHECK(s(0.2) == Approx(1.0).epsilon(1e-12));
  CHECK(s(0.8) == Approx(0.6).epsilon(1e-12));
  CHECK(std::abs(s.first()(0.2) - s.second()(0.2)) < 1e-9);
  double prev = s(0.0);
  for (int i = 1; i <= 2000; ++i) {
    const double x = 0.2 * i / 2000.0;
    const double y = s(x);
    CHECK(y >= prev - 1e-12);
    prev = y;
  }
  CHECK(s(5.0) == Approx(0.6));
  CHECK(s(-1.0) == Approx(0.0));
}

TEST_CASE("pure rolling gives no longitudinal force") {
  const TireFrictionSpline s;
  const auto f = tire_forces(10.0 / 0.4, 10.0, 0.0, 0.4, s, 3000.0);
  CHECK(f.slip_x == Approx(0.0));
  CHECK(f.longitudinal == Approx(0.0));
}

TEST_CASE("tire forces oppose slip") {
  const TireFrictionSpline s;
  const auto spin = tire_forces(40.0, 10.0, 0.0, 0.4, s, 3000.0);
  CHECK(spin.slip_x > 0.0);
  CHECK(spin.longitudinal > 0.0);
  const auto skid = tire_forces(0.0, 10.0, 1.0, 0.4, s, 3000.0);
  CHECK(skid.longitudinal < 0.0);
  CHECK(skid.lateral < 0.0);
}

TEST_CASE("aero case table is exhaustive and ordered") {
  AeroParams p;
  int counts[4] = {0, 0, 0, 0};
  for (double speed : {0.0, 3.0, 6.0, 10.0, 29.9, 30.0, 35.0}) {
    for (double tau : {0.0, 50.0, -50.0}) {
      for (GearMode mode : {GearMode::drive, GearMode::reverse, GearMode::neutral}) {
        for (double rpm : {-300.0, 0.0, 300.0}) {
          AeroInput in;
          in.speed = speed;
          in.output_torque = tau;
          in.gear.mode = mode;
          in.wheel_rpm = rpm;
          const auto out = aero_forces(in, p);
          AeroCase expected;
          double drag;
          if (speed >= p.max_speed) {
            expected = AeroCase::top_speed;
            drag = p.drag_max;
          } else if (tau == 0.0) {
            expected = AeroCase::idle;
            drag = p.drag_idle;
          } else if (mode == GearMode::reverse && speed >= p.reverse_speed && rpm < 0.0) {
            expected = AeroCase::reverse_overspeed;
            drag = p.drag_reverse;
          } else {
            expected = AeroCase::nominal;
            drag = p.drag_idle;
          }
          CHECK(out.which == expected);
          CHECK(out.drag == drag);
          ++counts[static_cast<int>(out.which)];
        }
      }
    }
  }
  for (int c : counts) CHECK(c > 0);
  AeroInput rest;
  const auto out = aero_forces(rest, p);
  CHECK(out.angular_drag.norm() == 0.0);
  CHECK(out.downforce == 0.0);
}

TEST_CASE("vehicle at rest on flat ground stays at rest") {
  const VehicleModel model{VehicleConfig{}};
  const auto terrain = flat_ground();
  auto s = make_rest_state(model, terrain, 0.0, 0.0, 0.0);
  for (int i = 0; i < 1000; ++i) {
    integrate_step(s, model, terrain, 0.01);
    CHECK(s.speed() < 1e-3);
  }
}

TEST_CASE("vehicle rolls downhill on a 10 degree slope") {
  const VehicleModel model{VehicleConfig{}};
  const double slope = std::tan(10.0 * kPi / 180.0);
  const auto terrain =
      environment::TerrainHeightmap::plane(100.0, -slope, 0.0, 400.0, 60.0, 1.0, Vec2(-200, -30));
  auto s = make_rest_state(model, terrain, 0.0, 0.0, 0.0);
  double prev = s.forward_speed();
  for (int i = 0; i < 100; ++i) {
    integrate_step(s, model, terrain, 0.01);
    const double v = s.forward_speed();
    CHECK(v >= prev);
    CHECK(v <= kGravity * std::sin(10.0 * kPi / 180.0) * (i + 1) * 0.01 + 1e-6);
    prev = v;
  }
  CHECK(prev > 0.5);
}

TEST_CASE("kinetic energy does not grow while coasting on flat ground") {
  const VehicleModel model{VehicleConfig{}};
  const auto terrain = flat_ground();
  auto s = make_rest_state(model, terrain, -150.0, 0.0, 0.0);
  s.velocity = s.pose.linear() * Vec3(12.0, 0.0, 0.0);
  for (auto& w : s.wheels) w.omega = 12.0 / model.config.suspension[0].wheel_radius;
  for (int i = 0; i < 200; ++i) integrate_step(s, model, terrain, 0.01);  // settle
  auto energy = [&](const VehicleState& st) {
    return 0.5 * model.com.total_mass * st.planar_speed() * st.planar_speed();
  };
  double prev = energy(s);
  for (int i = 0; i < 500; ++i) {
    integrate_step(s, model, terrain, 0.01);
    const double e = energy(s);
    CHECK(e <= prev + 1e-6 * std::max(1.0, prev));
    prev = e;
  }
}

TEST_CASE("integration is bit-for-bit deterministic") {
  const VehicleModel model{VehicleConfig{}};
  const auto terrain = environment::make_corridor({});
  auto a = make_rest_state(model, terrain, 120.0, 0.0, 0.0);
  auto b = a;
  for (int i = 0; i < 1500; ++i) {
    VehicleCommand cmd;
    cmd.throttle = i < 800 ? 0.6 : 0.0;
    cmd.brake = i >= 800 ? 1.0 : 0.0;
    cmd.steering = 0.1 * std::sin(i * 0.01);
    a.command = cmd;
    b.command = cmd;
    integrate_step(a, model, terrain, 0.01);
    integrate_step(b, model, terrain, 0.01);
  }
  CHECK(a.pose.matrix() == b.pose.matrix());
  CHECK(a.velocity == b.velocity);
  CHECK(a.powertrain.engine_rpm == b.powertrain.engine_rpm);
}

TEST_CASE("non-finite state raises a simulation fault") {
  const VehicleModel model{VehicleConfig{}};
  const auto terrain = flat_ground();
  auto s = make_rest_state(model, terrain, 0.0, 0.0, 0.0);
  s.angular_velocity.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(integrate_step(s, model, terrain, 0.01), SimulationFault);
}

TEST_CASE("driving off the terrain raises a query error") {
  const VehicleModel model{VehicleConfig{}};
  const auto terrain = environment::TerrainHeightmap::flat(0.0, 10.0, 10.0, 1.0, Vec2(-5, -5));
  auto s = make_rest_state(model, terrain, 0.0, 0.0, 0.0);
  s.velocity = Vec3(30.0, 0.0, 0.0);
  CHECK_THROWS_AS(
      [&] {
        for (int i = 0; i < 100; ++i) integrate_step(s, model, terrain, 0.01);
      }(),
      QueryError);
}

TEST_CASE("vehicle config round-trips through JSON and rejects bad input") {
  VehicleConfig c;
  c.brake.braking_distance_60mph = 33.0;
  c.powertrain.drive = DriveConfig::rwd;
  const auto text = vehicle_config_to_json(c);
  const auto back = vehicle_config_from_json(text);
  CHECK(back.brake.braking_distance_60mph == 33.0);
  CHECK(back.powertrain.drive == DriveConfig::rwd);
  CHECK(vehicle_config_to_json(back) == text);
  CHECK_THROWS_AS(vehicle_config_from_json("{\"config_version\": 1, \"bogus\": 2}"), ConfigError);
  CHECK_THROWS_AS(vehicle_config_from_json("{\"config_version\": 9}"), ConfigError);
  CHECK_THROWS_AS(vehicle_config_from_json("not json"), ConfigError);
}
