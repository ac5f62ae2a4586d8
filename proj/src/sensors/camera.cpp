#include <cmath>

#include "twinforge/sensors.hpp"

namespace twinforge::sensors {

Pose CameraConfig::default_mount() {
  Pose p = Pose::Identity();
  Mat3 optical;
  // Columns: camera x (right), y (up), z (backwards) expressed in the vehicle frame.
  optical << 0.0, 0.0, -1.0,
            -1.0, 0.0, 0.0,
             0.0, 1.0, 0.0;
  p.linear() = optical;
  p.translation() = Vec3(1.2, 0.0, 0.9);
  return p;
}

Frustum camera_frustum(const CameraConfig& c) {
  if (!(c.near > 0.0) || !(c.far > c.near)) throw ConfigError("camera needs 0 < near < far");
  if (c.width < 1 || c.height < 1) throw ConfigError("camera resolution must be positive");
  if (!(c.focal_length > 0.0) || !(c.sensor_size.x() > 0.0) || !(c.sensor_size.y() > 0.0)) {
    throw ConfigError("degenerate camera frustum");
  }
  Frustum f;
  f.near = c.near;
  f.far = c.far;
  f.right = c.near * c.sensor_size.x() / (2.0 * c.focal_length);
  f.left = -f.right;
  f.top = c.near * c.sensor_size.y() / (2.0 * c.focal_length);
  f.bottom = -f.top;
  f.focal = 2.0 * f.near / (f.right - f.left);
  f.aspect = c.sensor_size.y() / c.sensor_size.x();
  return f;
}

CameraMatrices camera_matrices(const CameraConfig& config, const Pose& world_T_camera) {
  const Frustum f = camera_frustum(config);
  if (f.right == f.left || f.top == f.bottom) throw ConfigError("degenerate camera frustum");
  CameraMatrices m;
  m.view = world_T_camera.inverse(Eigen::Isometry).matrix();
  Mat4& P = m.projection;
  P.setZero();
  P(0, 0) = 2.0 * f.near / (f.right - f.left);
  P(0, 2) = (f.right + f.left) / (f.right - f.left);
  P(1, 1) = 2.0 * f.near / (f.top - f.bottom);
  P(1, 2) = (f.top + f.bottom) / (f.top - f.bottom);
  P(2, 2) = -(f.far + f.near) / (f.far - f.near);
  P(2, 3) = -2.0 * f.far * f.near / (f.far - f.near);
  P(3, 2) = -1.0;
  return m;
}

Projection project_point(const Vec4& world_point, const CameraMatrices& m, int width, int height) {
  Projection out;
  const Vec4 c = m.projection * (m.view * world_point);
  if (c.w() == 0.0 || !std::isfinite(c.w())) return out;
  out.valid = true;
  out.ndc = c.head<3>() / c.w();
  out.in_front = c.w() > 0.0;
  out.visible = out.in_front && (out.ndc.array().abs() <= 1.0).all();
  out.pixel = Vec2((out.ndc.x() + 1.0) * 0.5 * width, (1.0 - out.ndc.y()) * 0.5 * height);
  return out;
}

}  // namespace twinforge::sensors
