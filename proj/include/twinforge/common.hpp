#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Geometry>

namespace twinforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;
using Pose = Eigen::Isometry3d;

inline constexpr double kGravity = 9.81;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMphToMps = 0.44704;

/// Invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite state or force during integration; the episode must abort.
class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Terrain query outside the heightmap.
class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a. Stable across platforms and runs; used to derive case seeds.
std::uint64_t stable_hash(std::string_view text);

/// Counter-based generator: the n-th draw is a pure function of (seed, n).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal via Box-Muller on two uniforms.
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on characters outside the standard alphabet or bad padding.
std::string base64_decode(std::string_view text);

/// Pose from translation + roll/pitch/yaw (ZYX).
Pose make_pose(const Vec3& translation, double roll, double pitch, double yaw);

/// ZYX Euler angles (roll about x, pitch about y, yaw about z).
Vec3 euler_from_rotation(const Mat3& rotation);

}  // namespace twinforge
