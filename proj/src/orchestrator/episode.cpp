#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"
#include "twinforge/orchestrator.hpp"

namespace twinforge::orchestrator {

namespace {

constexpr double kStandstill = 0.05;  // m/s
constexpr double kRestitution = 0.3;
constexpr double kObstacleFriction = 0.5;  // sliding deceleration in g
constexpr double kLidarSector = 15.0 * kPi / 180.0;

autonomy::AebConfig planner_config(const EpisodeInputs& in) {
  auto c = in.presets.aeb;
  c.cruise_speed = in.scenario.cruise_speed;
  return c;
}

}  // namespace

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::running: return "running";
    case Termination::aeb_stop: return "aeb_stop";
    case Termination::collision_standstill: return "collision_standstill";
    case Termination::timeout: return "timeout";
  }
  return "running";
}

Episode::Episode(const TestCase& test_case, const EpisodeInputs& inputs, EpisodeOptions options)
    : case_(test_case),
      inputs_(inputs),
      options_(options),
      model_(inputs.vehicle),
      scene_(environment::build_scene(inputs.scenario)),
      condition_(environment::condition_derive(test_case.weather, test_case.time,
                                               inputs.scenario.tables)),
      planner_(planner_config(inputs), inputs.camera),
      rng_(options.seed_override.value_or(test_case.seed)) {
  sensors::camera_frustum(inputs_.camera);
  inputs_.lidar.validate();
  preset_ = &inputs_.presets.preset(case_.model);
  preset_->validate();
  lights_ = autonomy::headlight_control(condition_.ambient_light, condition_.fog_density,
                                        inputs_.presets.headlights);
  const auto& sc = inputs_.scenario;
  state_ = dynamics::make_rest_state(model_, scene_.terrain, sc.ego_x, sc.ego_y, sc.ego_yaw);
  dt_ = inputs_.vehicle.fixed_dt;
  footprint_ = {inputs_.vehicle.front_overhang, inputs_.vehicle.rear_overhang,
                0.5 * inputs_.vehicle.body_width};
  obstacle_velocity_.assign(scene_.obstacles.size(), Vec3::Zero());
  overlapping_.assign(scene_.obstacles.size(), false);
  if (options_.keep_csv) sink_ = std::make_unique<metrics::TelemetrySink>(csv_);
}

std::size_t Episode::memory_bytes() const {
  const auto pos = static_cast<std::streamoff>(csv_.tellp());
  return scene_.terrain.memory_bytes() + static_cast<std::size_t>(pos > 0 ? pos : 0);
}

void Episode::camera_frame() {
  const Pose world_T_camera = state_.pose * inputs_.camera.mount;
  const auto views = autonomy::project_obstacles(inputs_.camera, world_T_camera, scene_.obstacles);
  const auto dets =
      autonomy::surrogate_detect(views, condition_, lights_, *preset_, inputs_.presets.detector,
                                 inputs_.camera.width, inputs_.camera.height, rng_);
  planner_.observe(dets);
  detection_count_ = static_cast<int>(dets.size());
  best_confidence_ = 0.0;
  best_area_ = 0.0;
  for (const auto& d : dets) {
    best_confidence_ = std::max(best_confidence_, d.confidence);
    best_area_ = std::max(best_area_, d.bbox_area);
  }
}

void Episode::lidar_scan() {
  const auto& cfg = inputs_.lidar;
  const Pose world_T_lidar = state_.pose * cfg.mount;
  const auto ranges = sensors::lidar_scan_2d(cfg, world_T_lidar, scene_);
  lidar_min_front_ = sensors::min_range_in_sector(cfg, ranges, kLidarSector);
  if (options_.scan_dump) {
    sensors::PointCloud pc;
    pc.channels = 1;
    pc.rays = ranges.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      const double th = cfg.theta_min + static_cast<double>(i) * cfg.theta_res;
      pc.points.push_back(std::isfinite(ranges[i])
                              ? Vec3(ranges[i] * std::cos(th), ranges[i] * std::sin(th), 0.0)
                              : Vec3(nan, nan, nan));
    }
    char head[64];
    std::snprintf(head, sizeof head, "# scan t=%.6f\n", state_.time);
    *options_.scan_dump << head << pc.ascii();
  }
}

void Episode::resolve_collisions() {
  const double total_mass = model_.com.total_mass;
  for (std::size_t i = 0; i < scene_.obstacles.size(); ++i) {
    auto& ob = scene_.obstacles[i];
    auto& vo = obstacle_velocity_[i];
    if (ob.dynamic && vo.head<2>().squaredNorm() > 0.0) {
      const double speed = vo.head<2>().norm();
      const double slowed = std::max(0.0, speed - kObstacleFriction * kGravity * dt_);
      vo.head<2>() *= slowed / speed;
      Vec3 p = ob.pose.translation() + dt_ * vo;
      if (scene_.terrain.contains(p.x(), p.y())) {
        p.z() = scene_.terrain.height_at(p.x(), p.y()) + ob.half_extents.z();
      }
      ob.pose.translation() = p;
    }
    const bool overlap = metrics::footprints_overlap(state_.pose, footprint_, ob);
    if (overlap && !overlapping_[i]) {
      ++collisions_;
      if (ob.dynamic) {
        Vec3 f = state_.pose.linear().col(0);
        f.z() = 0.0;
        f.normalize();
        const double ve = state_.velocity.dot(f);
        const double v_obs = vo.dot(f);
        if (ve > v_obs) {
          const double m = ob.mass;
          const double v_obs_after =
              (total_mass * ve * (1.0 + kRestitution) + v_obs * (m - kRestitution * total_mass)) /
              (total_mass + m);
          const double ve_after = (total_mass * ve + m * v_obs - m * v_obs_after) / total_mass;
          vo += (v_obs_after - v_obs) * f;
          state_.velocity += (ve_after - ve) * f;
        }
      }
    }
    overlapping_[i] = overlap;
  }
}

bool Episode::step() {
  if (termination_ != Termination::running) return false;
  const auto& sc = inputs_.scenario;

  const auto frame = static_cast<long>(std::floor(state_.time * inputs_.camera.rate + 1e-9));
  if (frame != camera_frames_) {
    camera_frames_ = frame;
    camera_frame();
  }
  const auto scan = static_cast<long>(std::floor(state_.time * inputs_.lidar.rate + 1e-9));
  if (scan != lidar_scans_) {
    lidar_scans_ = scan;
    lidar_scan();
  }

  const double speed = state_.forward_speed();
  const auto decision = planner_.decide(speed);
  const auto lon = autonomy::longitudinal_control(decision, speed, sc.cruise_speed,
                                                  inputs_.presets.aeb.kp);
  const Vec3 euler = euler_from_rotation(state_.pose.linear());
  dynamics::VehicleCommand cmd;
  cmd.throttle = lon.throttle;
  cmd.brake = lon.brake;
  cmd.steering = autonomy::lane_keeping(inputs_.lane, state_.pose.translation().y(), euler.z());
  state_.command = cmd;

  dynamics::integrate_step(state_, model_, scene_.terrain, dt_, condition_.traction);
  ++steps_;
  state_.time = static_cast<double>(steps_) * dt_;
  resolve_collisions();

  double dtc = std::numeric_limits<double>::infinity();
  for (const auto& ob : scene_.obstacles) {
    dtc = std::min(dtc, metrics::compute_dtc(state_.pose, footprint_, ob));
  }

  metrics::TelemetryRecord r;
  const Vec3 pos = state_.pose.translation();
  const Vec3 e = euler_from_rotation(state_.pose.linear());
  r.t = state_.time;
  r.x = pos.x();
  r.y = pos.y();
  r.z = pos.z();
  r.roll = e.x();
  r.pitch = e.y();
  r.yaw = e.z();
  r.speed = state_.forward_speed();
  const auto fb = sensors::actuator_feedback(state_);
  r.throttle = fb.throttle;
  r.steering = fb.steering;
  r.brake = fb.brake;
  r.handbrake = fb.handbrake;
  r.gear = state_.powertrain.gear.code();
  r.engine_rpm = state_.powertrain.engine_rpm;
  r.detection_count = detection_count_;
  r.best_confidence = best_confidence_;
  r.best_area_px = best_area_;
  r.aeb_active = planner_.triggered() ? 1 : 0;
  r.dtc = dtc;
  r.collision_count = collisions_;
  r.lights = static_cast<int>(lights_);
  r.lidar_min_front = lidar_min_front_;
  if (sink_) sink_->log_step(r);
  last_ = r;

  const double t = state_.time;
  const bool still = std::abs(r.speed) < kStandstill;
  if (planner_.triggered() && still && !stop_time_) stop_time_ = t;
  if (collisions_ > 0 && still) {
    if (standstill_since_ < 0.0) standstill_since_ = t;
  } else {
    standstill_since_ = -1.0;
  }
  if (stop_time_ && t >= *stop_time_ + sc.post_stop_window - 1e-9) {
    termination_ = Termination::aeb_stop;
  } else if (standstill_since_ >= 0.0 && t - standstill_since_ >= sc.collision_standstill - 1e-9) {
    termination_ = Termination::collision_standstill;
  } else if (t >= sc.t_max - 1e-9) {
    termination_ = Termination::timeout;
  }
  return termination_ == Termination::running;
}

void Episode::run() {
  while (step()) {
  }
}

EpisodeResult run_episode(const TestCase& test_case, const EpisodeInputs& inputs,
                          const EpisodeOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  EpisodeOptions opts = options;
  opts.keep_csv = true;
  Episode ep(test_case, inputs, opts);
  ep.run();
  EpisodeResult out;
  out.csv = ep.csv();
  out.verdict = metrics::evaluate_verdict_csv(test_case.case_id, out.csv);
  out.termination = ep.termination();
  out.steps = ep.steps();
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void apply_overrides(const std::string& overrides_json, TestCase& tc, EpisodeInputs& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(overrides_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("overrides are not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("overrides must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "cruise_speed" || key == "t_max" || key == "post_stop_window") {
        const double v = value.get<double>();
        if (!(v >= 0.0) || (key != "post_stop_window" && !(v > 0.0))) {
          throw ConfigError("override " + key + " out of range");
        }
        if (key == "cruise_speed") in.scenario.cruise_speed = v;
        if (key == "t_max") in.scenario.t_max = v;
        if (key == "post_stop_window") in.scenario.post_stop_window = v;
      } else if (key == "weather") {
        const auto w = environment::parse_weather(value.get<std::string>());
        if (!w) throw ConfigError("unknown weather override");
        tc.weather = *w;
      } else if (key == "time") {
        const auto t = environment::parse_time(value.get<std::string>());
        if (!t) throw ConfigError("unknown time override");
        tc.time = *t;
      } else if (key == "model") {
        const auto m = autonomy::parse_model(value.get<std::string>());
        if (!m) throw ConfigError("unknown model override");
        tc.model = *m;
      } else if (key == "seed") {
        tc.seed = value.get<std::uint64_t>();
      } else {
        throw ConfigError("unknown override '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad override value: ") + e.what());
  }
}

}  // namespace twinforge::orchestrator
