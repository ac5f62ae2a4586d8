#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twinforge/common.hpp"
#include "twinforge/dynamics.hpp"
#include "twinforge/environment.hpp"

namespace twinforge::sensors {

/// Commanded actuator values as last relayed to the vehicle.
struct ActuatorFeedback {
  double throttle = 0.0;
  double steering = 0.0;
  double brake = 0.0;
  double handbrake = 0.0;

  bool operator==(const ActuatorFeedback&) const = default;
};

ActuatorFeedback actuator_feedback(const dynamics::VehicleState& state);

struct EncoderConfig {
  int ppr = 360;
  double cumulative_gear_ratio = 1.0;
  double noise_sigma = 0.0;  // ticks
};

/// floor(PPR * CGR * revolutions). Throws ConfigError on PPR < 1 or CGR <= 0.
std::int64_t encoder_ticks(const EncoderConfig& config, double revolutions,
                           CounterRng* rng = nullptr);

struct InsReading {
  Vec3 position = Vec3::Zero();
  Vec3 euler = Vec3::Zero();  // roll, pitch, yaw
  Quat quaternion = Quat::Identity();
  Vec3 linear_accel = Vec3::Zero();  // specific force, body frame
  Vec3 angular_vel = Vec3::Zero();  // body frame
};

struct InsConfig {
  double accel_noise_sigma = 0.0;
  double gyro_noise_sigma = 0.0;
  double position_noise_sigma = 0.0;
};

/// Pose, specific force and body rates. Without a previous state the accelerometer
/// reports the gravity reaction only.
InsReading ins_read(const dynamics::VehicleState& current,
                    const dynamics::VehicleState* previous, double dt,
                    const InsConfig& config = {}, CounterRng* rng = nullptr);

// ---------------------------------------------------------------------------
// Camera (OpenGL convention: the camera looks down its -z axis, y up)

struct CameraConfig {
  double focal_length = 0.0035;  // m
  Vec2 sensor_size{0.0064, 0.0048};  // m
  int width = 640;
  int height = 480;
  double near = 0.1;
  double far = 200.0;
  /// Vehicle <- camera. The default includes the optical-frame rotation so the camera
  /// looks along the vehicle's +x with its image x to the vehicle's right.
  Pose mount = default_mount();
  double rate = 30.0;  // Hz

  static Pose default_mount();
};

struct Frustum {
  double left = 0, right = 0, top = 0, bottom = 0, near = 0, far = 0;
  double focal = 0.0;  // normalised, 2N / (R - L)
  double aspect = 0.0;  // s_y / s_x
};

Frustum camera_frustum(const CameraConfig& config);

struct CameraMatrices {
  Mat4 view = Mat4::Identity();
  Mat4 projection = Mat4::Identity();
};

/// V = inverse(world <- camera) and the perspective matrix of the frustum.
/// Throws ConfigError on a degenerate frustum.
CameraMatrices camera_matrices(const CameraConfig& config, const Pose& world_T_camera);

struct Projection {
  Vec3 ndc = Vec3::Zero();
  Vec2 pixel = Vec2::Zero();
  bool visible = false;
  bool in_front = false;
  bool valid = false;  // false when w_c == 0
};

Projection project_point(const Vec4& world_point, const CameraMatrices& m, int width, int height);

// ---------------------------------------------------------------------------
// LIDAR

enum class LidarMode { planar, spatial };

struct LidarConfig {
  LidarMode mode = LidarMode::planar;
  double r_min = 0.1;
  double r_max = 40.0;
  double theta_min = -kPi / 2.0;
  double theta_max = kPi / 2.0;
  double theta_res = kPi / 180.0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  double phi_res = kPi / 180.0;
  double rate = 10.0;  // Hz
  Pose mount = make_pose(Vec3(1.0, 0.0, 0.6), 0.0, 0.0, 0.0);  // vehicle <- lidar
  double noise_sigma = 0.0;  // m

  void validate() const;
};

/// Number of samples on [lo, hi] with step res (inclusive of both ends when aligned).
std::size_t grid_count(double lo, double hi, double res);

/// One range per azimuth; +inf for misses and hits closer than r_min.
std::vector<double> lidar_scan_2d(const LidarConfig& config, const Pose& world_T_lidar,
                                  const environment::Scene& scene, CounterRng* rng = nullptr);

struct PointCloud {
  std::size_t channels = 0;
  std::size_t rays = 0;
  std::vector<Vec3> points;  // LIDAR frame, channel-major; NaN triplet for a miss

  /// Little-endian float32 x,y,z per point, 12 bytes each.
  std::vector<std::uint8_t> encode() const;
  /// One "x y z" line per hit with 6 decimals.
  std::string ascii() const;
};

PointCloud lidar_scan_3d(const LidarConfig& config, const Pose& world_T_lidar,
                         const environment::Scene& scene, CounterRng* rng = nullptr);

/// Minimum finite range over azimuths with |theta| <= half_angle, or +inf.
double min_range_in_sector(const LidarConfig& config, const std::vector<double>& ranges,
                           double half_angle);

}  // namespace twinforge::sensors
