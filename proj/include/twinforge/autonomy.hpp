#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twinforge/common.hpp"
#include "twinforge/environment.hpp"
#include "twinforge/sensors.hpp"

namespace twinforge::autonomy {

enum class ModelId { v2, v2_tiny, v3, v3_tiny };
inline constexpr std::array<ModelId, 4> kAllModels{ModelId::v2, ModelId::v2_tiny, ModelId::v3,
                                                   ModelId::v3_tiny};

std::string_view to_string(ModelId m);
std::optional<ModelId> parse_model(std::string_view name);

struct PerceptionModelPreset {
  ModelId model = ModelId::v3;
  double base_detect_rate = 0.95;
  double range_halflife = 60.0;  // m
  double low_light_penalty = 0.1;
  double confidence_mean = 0.9;
  double confidence_spread = 0.12;
  double min_pixel_area = 50.0;  // px^2

  void validate() const;
};

/// Shape of the surrogate detector shared by all presets.
struct DetectorConfig {
  double daylight_exponent = 0.3;  // visibility exponent with enough ambient light
  double low_light_threshold = 0.5;  // ambient below this applies the preset's penalty
  double low_light_gain = 4.0;  // exponent += gain * low_light_penalty in the dark
  double confidence_visibility_mix = 0.4;
  std::array<double, 3> headlight_gain{0.0, 0.25, 0.4};  // off, low beam, high beam + fog
  double false_positive_rate = 0.005;  // per frame
  double false_positive_max_area = 150.0;  // px^2
};

enum class Lights { off = 0, low_beam = 1, high_beam_plus_fog = 2 };
std::string_view to_string(Lights l);

struct HeadlightThresholds {
  double day_ambient = 0.6;
  double fog_low = 0.3;
  double night_ambient = 0.3;
  double fog_high = 0.6;
};

Lights headlight_control(double ambient_light, double fog_density,
                         const HeadlightThresholds& thresholds = {});

struct ObstacleView {
  int obstacle_id = 0;
  std::string label;
  bool visible = false;
  double area = 0.0;  // px^2, clipped to the image
  Vec2 center = Vec2::Zero();
  double bbox_height = 0.0;  // px, clipped
  double distance = 0.0;  // camera to box centre, m
};

/// Screen-space bounding boxes of the obstacle boxes from their projected corners.
std::vector<ObstacleView> project_obstacles(const sensors::CameraConfig& camera,
                                            const Pose& world_T_camera,
                                            std::span<const environment::Obstacle> obstacles);

struct Detection {
  std::string label;
  double confidence = 0.0;
  double bbox_area = 0.0;
  Vec2 center = Vec2::Zero();
  double bbox_height = 0.0;
  bool false_positive = false;
};

/// Per-frame detection probability for a visible obstacle at `distance`.
double detection_probability(const PerceptionModelPreset& preset, const DetectorConfig& detector,
                             const environment::EnvironmentCondition& condition, double distance);

/// Mean of the confidence distribution before clamping.
double confidence_center(const PerceptionModelPreset& preset, const DetectorConfig& detector,
                         const environment::EnvironmentCondition& condition, Lights lights);

std::vector<Detection> surrogate_detect(std::span<const ObstacleView> views,
                                        const environment::EnvironmentCondition& condition,
                                        Lights lights, const PerceptionModelPreset& preset,
                                        const DetectorConfig& detector, int width, int height,
                                        CounterRng& rng);

// ---------------------------------------------------------------------------
// Planning and control

struct AebConfig {
  std::set<std::string> threat_classes{"moose"};
  double min_confidence = 0.5;
  double min_area = 400.0;  // px^2
  int persistence_frames = 3;
  double fos = 1.5;
  double cruise_speed = 11.1;  // m/s
  double a_max = 6.0;  // m/s^2, planner's deceleration model
  double kp = 0.2;
  double standstill_speed = 0.05;  // m/s
  double camera_to_bumper = 0.65;  // m, subtracted from camera range estimates
  std::map<std::string, double> class_heights{{"moose", 2.1}};  // m, monocular range prior

  void validate() const;
};

/// `release` follows a completed AEB stop: no throttle and no brake.
enum class AebDecision { cruise, brake, release };

/// v^2 / (2 a_max).
double stopping_distance(double speed, double a_max);

/// Stateless trigger rule: persisted threat and FOS-scaled stopping distance reaching the DTC.
bool aeb_should_brake(int persisted_frames, const AebConfig& config, double dtc_estimate,
                      double speed);

bool is_threat(const Detection& d, const AebConfig& config);

/// Range to the obstacle front from a detection's box height and the class height prior.
std::optional<double> estimate_dtc(const Detection& d, const AebConfig& config,
                                   const sensors::CameraConfig& camera);

class AebPlanner {
 public:
  explicit AebPlanner(AebConfig config, sensors::CameraConfig camera = {});

  /// Consumes one camera frame.
  void observe(std::span<const Detection> detections);
  /// Decision for the current physics step.
  AebDecision decide(double speed);

  bool triggered() const { return triggered_; }
  int streak() const { return streak_; }
  std::optional<double> dtc_estimate() const { return dtc_estimate_; }
  const AebConfig& config() const { return config_; }

 private:
  AebConfig config_;
  sensors::CameraConfig camera_;
  int streak_ = 0;
  std::optional<double> dtc_estimate_;
  bool triggered_ = false;
  bool released_ = false;
};

struct LongitudinalCommand {
  double throttle = 0.0;
  double brake = 0.0;
};

LongitudinalCommand longitudinal_control(AebDecision decision, double speed, double cruise_speed,
                                         double kp = 0.2);

struct LaneKeeping {
  double lateral_gain = 0.3;  // per m
  double heading_gain = 1.0;  // per rad
  double lane_y = 0.0;
};

/// Steering command in [-1, 1], positive right.
double lane_keeping(const LaneKeeping& gains, double y, double yaw);

// ---------------------------------------------------------------------------
// Preset file

struct PresetFile {
  std::array<PerceptionModelPreset, 4> presets;  // indexed by ModelId
  DetectorConfig detector;
  AebConfig aeb;
  HeadlightThresholds headlights;

  const PerceptionModelPreset& preset(ModelId m) const {
    return presets[static_cast<std::size_t>(m)];
  }
  PerceptionModelPreset& preset(ModelId m) { return presets[static_cast<std::size_t>(m)]; }
};

PresetFile default_presets();
PresetFile presets_from_json(const std::string& text);
PresetFile load_presets(const std::string& path);
std::string presets_to_json(const PresetFile& presets);

}  // namespace twinforge::autonomy
