#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "twinforge/sensors.hpp"

using namespace twinforge;
using namespace twinforge::sensors;
using doctest::Approx;

namespace {

environment::Scene flat_scene(double size = 200.0) {
  environment::Scene s;
  s.terrain = environment::TerrainHeightmap::flat(0.0, size, size, 1.0, Vec2(-size / 2, -size / 2));
  return s;
}

}  // namespace

TEST_CASE("encoder tick counts") {
  EncoderConfig c;
  c.ppr = 360;
  c.cumulative_gear_ratio = 2.0;
  CHECK(encoder_ticks(c, 1.0) == 720);
  CHECK(encoder_ticks(c, 0.5) == 360);
  CHECK(encoder_ticks(c, 0.0014) == 1);
  CHECK(encoder_ticks(c, -0.0014) == -2);
  CHECK(encoder_ticks(c, 0.0) == 0);
  c.ppr = 0;
  CHECK_THROWS_AS(encoder_ticks(c, 1.0), ConfigError);
  c.ppr = 1;
  c.cumulative_gear_ratio = 0.0;
  CHECK_THROWS_AS(encoder_ticks(c, 1.0), ConfigError);
}

TEST_CASE("encoder ticks are monotone in revolutions") {
  EncoderConfig c;
  c.ppr = 1024;
  c.cumulative_gear_ratio = 3.7;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(gen), b = u(gen);
    CHECK((a <= b) == (encoder_ticks(c, a) <= encoder_ticks(c, b) || a == b));
  }
}

TEST_CASE("actuator feedback echoes the command") {
  dynamics::VehicleState s;
  s.command.throttle = 0.4;
  s.command.steering = -0.2;
  s.command.brake = 0.1;
  s.command.handbrake = true;
  const auto fb = actuator_feedback(s);
  CHECK(fb == ActuatorFeedback{0.4, -0.2, 0.1, 1.0});
}

TEST_CASE("INS at rest reports the gravity reaction") {
  dynamics::VehicleState s;
  s.pose = make_pose(Vec3(1, 2, 3), 0.1, -0.2, 0.7);
  const auto r = ins_read(s, nullptr, 0.01);
  const Vec3 g_body = s.pose.linear().transpose() * Vec3(0, 0, kGravity);
  CHECK((r.linear_accel - g_body).norm() < 1e-12);
  CHECK(r.euler.x() == Approx(0.1));
  CHECK(r.euler.y() == Approx(-0.2));
  CHECK(r.euler.z() == Approx(0.7));
  CHECK(r.quaternion.norm() == Approx(1.0));
  CHECK(r.quaternion.w() >= 0.0);
  CHECK((r.position - Vec3(1, 2, 3)).norm() == 0.0);
}

TEST_CASE("INS differentiates velocity") {
  dynamics::VehicleState a, b;
  a.velocity = Vec3(10, 0, 0);
  b.velocity = Vec3(10.5, 0, 0);
  const auto r = ins_read(b, &a, 0.1);
  CHECK(r.linear_accel.x() == Approx(5.0));
  CHECK(r.linear_accel.z() == Approx(kGravity));
}

TEST_CASE("quaternion and Euler agree on random poses") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> a(-1.4, 1.4), y(-3.1, 3.1);
  for (int i = 0; i < 1000; ++i) {
    dynamics::VehicleState s;
    s.pose = make_pose(Vec3::Zero(), a(gen), a(gen), y(gen));
    const auto r = ins_read(s, nullptr, 0.01);
    const Mat3 from_q = r.quaternion.toRotationMatrix();
    const Mat3 from_e = make_pose(Vec3::Zero(), r.euler.x(), r.euler.y(), r.euler.z()).linear();
    CHECK((from_q - from_e).norm() < 1e-9);
  }
}

TEST_CASE("sensor noise is seeded and reproducible") {
  dynamics::VehicleState s;
  InsConfig cfg;
  cfg.accel_noise_sigma = 0.1;
  CounterRng r1(42), r2(42), r3(43);
  const auto a = ins_read(s, nullptr, 0.01, cfg, &r1);
  const auto b = ins_read(s, nullptr, 0.01, cfg, &r2);
  const auto c = ins_read(s, nullptr, 0.01, cfg, &r3);
  CHECK(a.linear_accel == b.linear_accel);
  CHECK(a.linear_accel != c.linear_accel);
}

TEST_CASE("camera frustum from intrinsics") {
  CameraConfig c;
  const auto f = camera_frustum(c);
  CHECK(f.right == Approx(0.1 * 0.0064 / 0.007));
  CHECK(f.left == -f.right);
  CHECK(f.focal == Approx(2.0 * 0.0035 / 0.0064));
  CHECK(f.aspect == Approx(0.75));
  c.near = 0.0;
  CHECK_THROWS_AS(camera_frustum(c), ConfigError);
  c.near = 1.0;
  c.far = 0.5;
  CHECK_THROWS_AS(camera_frustum(c), ConfigError);
  c = CameraConfig{};
  c.focal_length = 0.0;
  CHECK_THROWS_AS(camera_matrices(c, Pose::Identity()), ConfigError);
}

TEST_CASE("near and far planes map to the NDC depth range") {
  CameraConfig c;
  const auto m = camera_matrices(c, Pose::Identity());
  auto near_p = project_point(Vec4(0, 0, -c.near, 1), m, c.width, c.height);
  auto far_p = project_point(Vec4(0, 0, -c.far, 1), m, c.width, c.height);
  CHECK(near_p.ndc.z() == Approx(-1.0).epsilon(1e-12));
  CHECK(far_p.ndc.z() == Approx(1.0).epsilon(1e-9));
  CHECK(near_p.pixel.x() == Approx(c.width / 2.0));
  CHECK(near_p.pixel.y() == Approx(c.height / 2.0));
  const auto behind = project_point(Vec4(0, 0, 5, 1), m, c.width, c.height);
  CHECK_FALSE(behind.in_front);
  CHECK_FALSE(behind.visible);
  const auto degenerate = project_point(Vec4(1, 1, 0, 1), m, c.width, c.height);
  CHECK_FALSE(degenerate.valid);
}

TEST_CASE("default mount looks along the vehicle's forward axis") {
  CameraConfig c;
  const Pose world_T_vehicle = make_pose(Vec3(10, 5, 0), 0, 0, 0);
  const auto m = camera_matrices(c, world_T_vehicle * c.mount);
  const Vec3 cam = (world_T_vehicle * c.mount).translation();
  const auto ahead = project_point(Vec4(cam.x() + 20, cam.y(), cam.z(), 1), m, c.width, c.height);
  CHECK(ahead.visible);
  CHECK(ahead.pixel.x() == Approx(c.width / 2.0));
  // A point to the vehicle's right (-y) lands on the right half of the image.
  const auto right = project_point(Vec4(cam.x() + 20, cam.y() - 2, cam.z(), 1), m, c.width, c.height);
  CHECK(right.pixel.x() > c.width / 2.0);
  const auto up = project_point(Vec4(cam.x() + 20, cam.y(), cam.z() + 2, 1), m, c.width, c.height);
  CHECK(up.pixel.y() < c.height / 2.0);
}

TEST_CASE("in-frustum points land inside the image") {
  CameraConfig c;
  const Pose world_T_camera = make_pose(Vec3(3, -2, 1), 0.1, 0.2, 0.3) * c.mount;
  const auto m = camera_matrices(c, world_T_camera);
  const auto f = camera_frustum(c);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double depth = f.near + (f.far - f.near) * u(gen);
    const double sx = (2 * u(gen) - 1) * f.right / f.near * depth;
    const double sy = (2 * u(gen) - 1) * f.top / f.near * depth;
    const Vec3 p = world_T_camera * Vec3(sx, sy, -depth);
    const auto pr = project_point(Vec4(p.x(), p.y(), p.z(), 1), m, c.width, c.height);
    REQUIRE(pr.valid);
    CHECK(pr.pixel.x() >= -1e-6);
    CHECK(pr.pixel.x() <= c.width + 1e-6);
    CHECK(pr.pixel.y() >= -1e-6);
    CHECK(pr.pixel.y() <= c.height + 1e-6);
    CHECK(pr.ndc.z() >= -1.0 - 1e-9);
    CHECK(pr.ndc.z() <= 1.0 + 1e-9);
  }
}

TEST_CASE("planar lidar against a wall") {
  auto scene = flat_scene();
  environment::Obstacle wall;
  wall.pose = make_pose(Vec3(5.5, 0, 1.0), 0, 0, 0);
  wall.half_extents = Vec3(0.5, 50, 1.0);
  scene.obstacles.push_back(wall);
  LidarConfig c;
  c.theta_min = -kPi / 4;
  c.theta_max = kPi / 4;
  const Pose world_T_lidar = make_pose(Vec3(0, 0, 1.0), 0, 0, 0);
  const auto ranges = lidar_scan_2d(c, world_T_lidar, scene);
  REQUIRE(ranges.size() == grid_count(c.theta_min, c.theta_max, c.theta_res));
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const double theta = c.theta_min + static_cast<double>(i) * c.theta_res;
    CHECK(ranges[i] == Approx(5.0 / std::cos(theta)).epsilon(1e-9));
  }
  CHECK(min_range_in_sector(c, ranges, 15 * kPi / 180) == Approx(5.0));
}

TEST_CASE("planar lidar misses report infinity") {
  auto scene = flat_scene();
  LidarConfig c;
  const auto ranges = lidar_scan_2d(c, make_pose(Vec3(0, 0, 1), 0, 0, 0), scene);
  for (double r : ranges) CHECK(std::isinf(r));
  CHECK(std::isinf(min_range_in_sector(c, ranges, 0.3)));
}

TEST_CASE("r_min discards near hits") {
  auto scene = flat_scene();
  environment::Obstacle box;
  box.pose = make_pose(Vec3(0.5, 0, 1.0), 0, 0, 0);
  box.half_extents = Vec3(0.3, 0.3, 1.0);
  scene.obstacles.push_back(box);
  LidarConfig c;
  c.r_min = 0.5;
  c.theta_min = c.theta_max = 0.0;
  const auto ranges = lidar_scan_2d(c, make_pose(Vec3(0, 0, 1), 0, 0, 0), scene);
  REQUIRE(ranges.size() == 1);
  CHECK(std::isinf(ranges[0]));
}

TEST_CASE("spatial lidar over flat ground") {
  auto scene = flat_scene();
  LidarConfig c;
  c.mode = LidarMode::spatial;
  c.r_max = 100.0;
  c.theta_min = -kPi;
  c.theta_max = kPi;
  c.theta_res = 5 * kPi / 180;
  c.phi_min = 5 * kPi / 180;
  c.phi_max = 60 * kPi / 180;
  c.phi_res = 5 * kPi / 180;
  const double h = 2.0;
  const auto pc = lidar_scan_3d(c, make_pose(Vec3(0, 0, h), 0, 0, 0), scene);
  REQUIRE(pc.points.size() == pc.channels * pc.rays);
  for (std::size_t ch = 0; ch < pc.channels; ++ch) {
    const double phi = c.phi_min + static_cast<double>(ch) * c.phi_res;
    const double expected = h / std::sin(phi);
    for (std::size_t i = 0; i < pc.rays; ++i) {
      const Vec3& p = pc.points[ch * pc.rays + i];
      if (expected > c.r_max) {
        CHECK(std::isnan(p.x()));
      } else {
        REQUIRE_FALSE(std::isnan(p.x()));
        CHECK(std::abs(p.norm() - expected) < 1e-6);
        CHECK(p.z() == Approx(-h));
      }
    }
  }
}

TEST_CASE("point cloud binary encoding") {
  PointCloud pc;
  pc.channels = 1;
  pc.rays = 2;
  const double nan = std::nan("");
  pc.points = {Vec3(1.5, -2.0, 0.25), Vec3(nan, nan, nan)};
  const auto bytes = pc.encode();
  REQUIRE(bytes.size() == 24);
  float f[6];
  std::memcpy(f, bytes.data(), 24);
  CHECK(f[0] == 1.5f);
  CHECK(f[1] == -2.0f);
  CHECK(f[2] == 0.25f);
  CHECK(std::isnan(f[3]));
  CHECK(bytes[0] == 0x00);
  CHECK(bytes[3] == 0x3f);
  CHECK(pc.ascii() == "1.500000 -2.000000 0.250000\n");
}

TEST_CASE("lidar config validation") {
  LidarConfig c;
  c.r_max = 0.05;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LidarConfig{};
  c.theta_res = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = LidarConfig{};
  auto scene = flat_scene();
  CHECK_THROWS_AS(lidar_scan_3d(c, Pose::Identity(), scene), ConfigError);
  CHECK(grid_count(-kPi / 2, kPi / 2, kPi / 180) == 181);
}
