#include <algorithm>
#include <cmath>

#include "twinforge/autonomy.hpp"

namespace twinforge::autonomy {

void AebConfig::validate() const {
  if (persistence_frames < 1) throw ConfigError("persistence_frames must be at least 1");
  if (!(fos >= 1.0)) throw ConfigError("FOS must be at least 1");
  if (!(a_max > 0.0)) throw ConfigError("a_max must be positive");
  if (!(cruise_speed >= 0.0)) throw ConfigError("cruise_speed must be nonnegative");
  if (min_confidence < 0.0 || min_confidence > 1.0) {
    throw ConfigError("min_confidence must lie in [0, 1]");
  }
  for (const auto& [label, h] : class_heights) {
    if (!(h > 0.0)) throw ConfigError("class height for " + label + " must be positive");
  }
}

double stopping_distance(double speed, double a_max) { return speed * speed / (2.0 * a_max); }

bool aeb_should_brake(int persisted_frames, const AebConfig& c, double dtc_estimate,
                      double speed) {
  if (persisted_frames < c.persistence_frames) return false;
  return stopping_distance(speed, c.a_max) * c.fos >= dtc_estimate;
}

bool is_threat(const Detection& d, const AebConfig& c) {
  return c.threat_classes.count(d.label) > 0 && d.confidence >= c.min_confidence &&
         d.bbox_area >= c.min_area;
}

std::optional<double> estimate_dtc(const Detection& d, const AebConfig& c,
                                   const sensors::CameraConfig& camera) {
  const auto it = c.class_heights.find(d.label);
  if (it == c.class_heights.end() || !(d.bbox_height > 0.0)) return std::nullopt;
  const double focal_px = camera.focal_length / camera.sensor_size.y() * camera.height;
  return focal_px * it->second / d.bbox_height - c.camera_to_bumper;
}

AebPlanner::AebPlanner(AebConfig config, sensors::CameraConfig camera)
    : config_(std::move(config)), camera_(std::move(camera)) {
  config_.validate();
}

void AebPlanner::observe(std::span<const Detection> detections) {
  const Detection* best = nullptr;
  for (const auto& d : detections) {
    if (!is_threat(d, config_)) continue;
    if (!best || d.bbox_area > best->bbox_area) best = &d;
  }
  if (!best) {
    streak_ = 0;
    return;
  }
  ++streak_;
  if (auto e = estimate_dtc(*best, config_, camera_)) dtc_estimate_ = *e;
}

AebDecision AebPlanner::decide(double speed) {
  if (released_) return AebDecision::release;
  if (triggered_) {
    if (std::abs(speed) < config_.standstill_speed) {
      released_ = true;
      return AebDecision::release;
    }
    return AebDecision::brake;
  }
  if (dtc_estimate_ && aeb_should_brake(streak_, config_, *dtc_estimate_, speed)) {
    triggered_ = true;
    return AebDecision::brake;
  }
  return AebDecision::cruise;
}

LongitudinalCommand longitudinal_control(AebDecision decision, double speed, double cruise_speed,
                                         double kp) {
  switch (decision) {
    case AebDecision::brake: return {0.0, 1.0};
    case AebDecision::release: return {0.0, 0.0};
    case AebDecision::cruise: break;
  }
  return {std::clamp(kp * (cruise_speed - speed), 0.0, 1.0), 0.0};
}

double lane_keeping(const LaneKeeping& g, double y, double yaw) {
  const double heading = std::remainder(yaw, 2.0 * kPi);
  return std::clamp(g.lateral_gain * (y - g.lane_y) + g.heading_gain * heading, -1.0, 1.0);
}

}  // namespace twinforge::autonomy
