#include <algorithm>
#include <cmath>
#include <limits>

#include "twinforge/autonomy.hpp"

namespace twinforge::autonomy {

std::string_view to_string(ModelId m) {
  switch (m) {
    case ModelId::v2: return "v2";
    case ModelId::v2_tiny: return "v2_tiny";
    case ModelId::v3: return "v3";
    case ModelId::v3_tiny: return "v3_tiny";
  }
  return "v3";
}

std::optional<ModelId> parse_model(std::string_view name) {
  for (ModelId m : kAllModels) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view to_string(Lights l) {
  switch (l) {
    case Lights::off: return "off";
    case Lights::low_beam: return "low_beam";
    case Lights::high_beam_plus_fog: return "high_beam_plus_fog";
  }
  return "off";
}

void PerceptionModelPreset::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(base_detect_rate) || !unit(low_light_penalty) || !unit(confidence_mean) ||
      !unit(confidence_spread)) {
    throw ConfigError("preset probabilities must lie in [0, 1]");
  }
  if (!(range_halflife > 0.0)) throw ConfigError("range_halflife must be positive");
  if (min_pixel_area < 0.0) throw ConfigError("min_pixel_area must be nonnegative");
}

Lights headlight_control(double ambient, double fog, const HeadlightThresholds& th) {
  if (ambient < th.night_ambient && fog >= th.fog_high) return Lights::high_beam_plus_fog;
  if (ambient < th.day_ambient || fog >= th.fog_low) return Lights::low_beam;
  return Lights::off;
}

std::vector<ObstacleView> project_obstacles(const sensors::CameraConfig& camera,
                                            const Pose& world_T_camera,
                                            std::span<const environment::Obstacle> obstacles) {
  const auto m = sensors::camera_matrices(camera, world_T_camera);
  const Pose camera_T_world = world_T_camera.inverse(Eigen::Isometry);
  std::vector<ObstacleView> out;
  out.reserve(obstacles.size());
  for (const auto& ob : obstacles) {
    ObstacleView v;
    v.obstacle_id = ob.id;
    v.label = ob.label;
    v.distance = (ob.pose.translation() - world_T_camera.translation()).norm();
    double u0 = std::numeric_limits<double>::infinity(), u1 = -u0, v0 = u0, v1 = -u0;
    int in_front = 0;
    for (int c = 0; c < 8; ++c) {
      const Vec3 local((c & 1 ? 1 : -1) * ob.half_extents.x(), (c & 2 ? 1 : -1) * ob.half_extents.y(),
                       (c & 4 ? 1 : -1) * ob.half_extents.z());
      const Vec3 w = ob.pose * local;
      // Corners behind the near plane cannot be projected meaningfully; skip them.
      if ((camera_T_world * w).z() > -camera.near) continue;
      const auto p = sensors::project_point(w.homogeneous(), m, camera.width, camera.height);
      if (!p.valid || !p.in_front) continue;
      ++in_front;
      u0 = std::min(u0, p.pixel.x());
      u1 = std::max(u1, p.pixel.x());
      v0 = std::min(v0, p.pixel.y());
      v1 = std::max(v1, p.pixel.y());
    }
    if (in_front > 0) {
      u0 = std::clamp(u0, 0.0, static_cast<double>(camera.width));
      u1 = std::clamp(u1, 0.0, static_cast<double>(camera.width));
      v0 = std::clamp(v0, 0.0, static_cast<double>(camera.height));
      v1 = std::clamp(v1, 0.0, static_cast<double>(camera.height));
      v.area = (u1 - u0) * (v1 - v0);
      v.visible = v.area > 0.0 && v.distance <= camera.far;
      v.center = Vec2(0.5 * (u0 + u1), 0.5 * (v0 + v1));
      v.bbox_height = v1 - v0;
    }
    if (!v.visible) v.area = 0.0;
    out.push_back(v);
  }
  return out;
}

double detection_probability(const PerceptionModelPreset& preset, const DetectorConfig& det,
                             const environment::EnvironmentCondition& cond, double distance) {
  double exponent = det.daylight_exponent;
  if (cond.ambient_light < det.low_light_threshold) {
    exponent += det.low_light_gain * preset.low_light_penalty;
  }
  const double vis = clamp01(cond.visibility);
  const double p = preset.base_detect_rate * std::pow(vis, exponent) *
                   std::exp2(-std::max(distance, 0.0) / preset.range_halflife);
  return clamp01(p);
}

double confidence_center(const PerceptionModelPreset& preset, const DetectorConfig& det,
                         const environment::EnvironmentCondition& cond, Lights lights) {
  const double vis = clamp01(cond.visibility);
  const double gain = det.headlight_gain[static_cast<std::size_t>(lights)];
  const double boosted = vis + gain * (1.0 - vis);
  const double mix = det.confidence_visibility_mix;
  return preset.confidence_mean * (1.0 - mix + mix * boosted);
}

std::vector<Detection> surrogate_detect(std::span<const ObstacleView> views,
                                        const environment::EnvironmentCondition& cond,
                                        Lights lights, const PerceptionModelPreset& preset,
                                        const DetectorConfig& det, int width, int height,
                                        CounterRng& rng) {
  std::vector<Detection> out;
  const double center = confidence_center(preset, det, cond, lights);
  for (const auto& v : views) {
    if (!v.visible || v.area < preset.min_pixel_area) continue;
    const double p = detection_probability(preset, det, cond, v.distance);
    if (rng.uniform() >= p) continue;
    Detection d;
    d.label = v.label;
    d.confidence = clamp01(center + preset.confidence_spread * rng.normal());
    d.bbox_area = v.area;
    d.center = v.center;
    d.bbox_height = v.bbox_height;
    out.push_back(d);
  }
  if (rng.uniform() < det.false_positive_rate) {
    Detection d;
    d.label = "clutter";
    d.false_positive = true;
    d.confidence = clamp01(0.3 + 0.1 * rng.normal());
    d.bbox_area = det.false_positive_max_area * rng.uniform();
    const double side = std::sqrt(d.bbox_area);
    d.center = Vec2(rng.uniform() * width, rng.uniform() * height);
    d.bbox_height = side;
    out.push_back(d);
  }
  return out;
}

}  // namespace twinforge::autonomy
