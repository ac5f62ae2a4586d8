#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twinforge/common.hpp"
#include "twinforge/environment.hpp"

namespace twinforge::dynamics {

// ---------------------------------------------------------------------------
// Rigid-body linkage

struct SprungMass {
  double mass = 0.0;  // kg
  Vec3 position = Vec3::Zero();  // reference frame, m
};

struct ComProperties {
  double total_mass = 0.0;
  Vec3 com = Vec3::Zero();
  Vec3 inertia = Vec3::Zero();  // diagonal (Ixx, Iyy, Izz) about the COM
};

/// Total mass, centre of mass and diagonal point-mass inertia about the COM.
/// Throws ConfigError on an empty set or a nonpositive mass.
ComProperties com_properties(std::span<const SprungMass> masses);

// ---------------------------------------------------------------------------
// Suspension

struct SuspensionParams {
  double natural_frequency = 7.54;  // rad/s (1.2 Hz)
  double damping_ratio = 0.35;
  double equilibrium = 0.45;  // fraction of travel compressed at rest
  double force_offset = 0.21;  // m
  double antiroll_stiffness = 4000.0;  // N per unit normalised travel
  double wheel_mass = 20.0;  // kg
  double wheel_radius = 0.41;  // m
};

struct SuspensionCoefficients {
  double stiffness = 0.0;  // N/m
  double damping = 0.0;  // N s/m
};

SuspensionCoefficients suspension_coefficients(double sprung_mass, double natural_frequency,
                                               double damping_ratio);

/// Full suspension travel such that the static deflection M g / K equals
/// `equilibrium` of it.
double suspension_displacement(double sprung_mass, double stiffness, double equilibrium);

/// Height of the suspension force application point, measured down from the COM.
double force_application_height(double com_z, double wheel_mount_z, double wheel_radius,
                                double force_offset);

struct WheelVertical {
  double z = 0.0;  // wheel centre, world
  double z_rate = 0.0;
};

struct SuspensionInput {
  double attach_z = 0.0;  // mount height Z (world)
  double attach_rate = 0.0;  // dZ/dt
  double ground_height = 0.0;
  double ground_rate = 0.0;  // d(ground)/dt under the moving wheel
  double travel_limit = 0.0;  // Z_s
  double sprung_mass = 0.0;
  SuspensionCoefficients coeffs;
  double wheel_mass = 0.0;
  double wheel_radius = 0.0;
  bool grounded = true;  // contact at the start of the step
};

struct SuspensionResult {
  double body_force = 0.0;  // along the body up axis, N
  double normal_load = 0.0;  // ground reaction on the wheel, N
  WheelVertical wheel;
  bool grounded = false;  // contact at the end of the step
  double extension = 0.0;  // mount-to-wheel-centre distance
};

/// One semi-implicit step of m z'' + B (z' - Z') + K (z - Z) with gravity and a
/// rigid ground constraint. An airborne wheel exerts no force on the body.
SuspensionResult suspension_step(const WheelVertical& wheel, const SuspensionInput& in, double dt);

/// Normalised travel (-Z_c - r_w) / Z_s, with Z_c the contact point in the mount frame.
double wheel_travel(double contact_z, double wheel_radius, double travel_limit);

/// Anti-roll pair: left gets Kr (R - L), right gets Kr (L - R); airborne wheels get 0.
std::pair<double, double> antiroll_forces(double travel_left, double travel_right, double kr,
                                          bool grounded_left, bool grounded_right);

// ---------------------------------------------------------------------------
// Powertrain

enum class DriveConfig { fwd, rwd, awd };
enum class GearMode { park, reverse, neutral, drive };

struct Gear {
  GearMode mode = GearMode::neutral;
  int index = 0;  // 1..n in drive, otherwise 0

  bool operator==(const Gear&) const = default;
  /// Signed numeric form: -1 reverse, 0 neutral, 1..n drive, and 'P' mapped to -2.
  int code() const;
};

struct PowertrainParams {
  // Engine torque vs RPM, piecewise linear, clamped outside the table.
  // Placeholder curve for an RZR-class engine; not measured data.
  std::vector<std::pair<double, double>> torque_curve{
      {0.0, 60.0}, {1000.0, 80.0}, {3000.0, 110.0}, {5000.0, 135.0},
      {7000.0, 150.0}, {8500.0, 130.0}, {9500.0, 0.0}};
  double idle_rpm = 1200.0;
  std::vector<double> forward_ratios{3.0, 2.0, 1.4, 1.0};
  double reverse_ratio = 3.0;
  double final_drive = 3.0;
  DriveConfig drive = DriveConfig::awd;
  double torque_drop = 0.8;  // 1/rad
  double smoothing_gain = 0.5;
  double shift_up_rpm = 6300.0;  // 90 % of the torque-peak RPM
  double shift_down_rpm = 2800.0;  // 40 %
  double shift_duration = 0.3;  // s
  double rpm_time_constant = 0.25;  // s
  double tire_radius = 0.41;  // m
};

struct PowertrainState {
  double engine_rpm = 1200.0;
  Gear gear;
  double shift_timer = 0.0;  // > 0 while the clutch is disengaged
};

struct PowertrainInput {
  double throttle = 0.0;  // [0, 1]
  bool handbrake = false;
  bool reverse_request = false;
  double wheel_rpm = 0.0;  // mean wheel RPM, signed
  double speed = 0.0;  // longitudinal, signed, m/s
};

struct PowertrainOutput {
  double engine_rpm = 0.0;
  Gear gear;
  double total_torque = 0.0;
  bool shifting = false;
};

double engine_torque(const PowertrainParams& p, double rpm);
/// Signed ratio for a gear (negative in reverse, 0 in neutral/park).
double gear_ratio(const PowertrainParams& p, const Gear& gear);
/// Non-linear throttle amplification, 1 + gain * throttle^2.
double throttle_gain(double throttle, double gain);
/// Engine RPM the transmission map assigns to a speed; works internally in MPH and inches.
double transmission_map_rpm(double speed_mps, double tire_radius_m, double final_drive,
                            double ratio);

PowertrainOutput powertrain_step(PowertrainState& state, const PowertrainParams& params,
                                 const PowertrainInput& in, double dt);

struct WheelTorques {
  double left = 0.0;
  double right = 0.0;
  double per_wheel_nominal = 0.0;  // tau_out before the differential drop
};

/// Differential split. Positive steering angle drops torque on the right wheel,
/// negative on the left; each drop is clamped to [0, 0.9].
WheelTorques torque_split(double total_torque, DriveConfig drive, double steering_angle,
                          double torque_drop);

// ---------------------------------------------------------------------------
// Steering

struct SteeringParams {
  double limit = 0.55;  // rad
  double sensitivity = 1.0;  // rad/s
  double speed_factor = -0.4;  // rad/s at top speed
  double wheelbase = 2.6;
  double track = 1.7;
  double top_speed = 30.0;
};

struct SteeringOutput {
  double angle = 0.0;
  double left = 0.0;
  double right = 0.0;
};

/// Ackermann wheel angles. Positive angle is a right turn, so the right wheel is inner.
std::pair<double, double> ackermann_angles(double angle, double wheelbase, double track);

SteeringOutput steering_step(double command, double current_angle, double speed,
                             const SteeringParams& params, double dt);

// ---------------------------------------------------------------------------
// Brake

struct BrakeParams {
  double disk_radius = 0.3;
  double braking_distance_60mph = 40.0;
};

enum class BrakeType { combi, handbrake };

/// Per-wheel brake torque M_i v^2 / (2 D) * R_b in FL, FR, RL, RR order.
std::array<double, 4> brake_torque(std::span<const double, 4> corner_masses, double speed,
                                   const BrakeParams& params, BrakeType type);

// ---------------------------------------------------------------------------
// Tire

class TireFrictionSpline {
 public:
  struct Segment {
    double a = 0, b = 0, c = 0, d = 0;
    double operator()(double s) const { return ((a * s + b) * s + c) * s + d; }
  };

  TireFrictionSpline() : TireFrictionSpline(fit({0.0, 0.0}, {0.2, 1.0}, {0.8, 0.75})) {}

  /// Two cubics: natural end at S0, zero slope at the extremum and at the asymptote.
  static TireFrictionSpline fit(Vec2 zero, Vec2 extremum, Vec2 asymptote, double stiffness = 0.0);
  static TireFrictionSpline from_coefficients(Vec2 zero, Vec2 extremum, Vec2 asymptote,
                                              Segment first, Segment second, double stiffness);

  /// Normalised force; clamps to the nearest knot value outside [S0, Sa].
  double operator()(double slip) const;

  const Vec2& zero() const { return zero_; }
  const Vec2& extremum() const { return extremum_; }
  const Vec2& asymptote() const { return asymptote_; }
  const Segment& first() const { return f0_; }
  const Segment& second() const { return f1_; }
  double stiffness() const { return stiffness_; }  // C_alpha, kept for completeness

 private:
  TireFrictionSpline(Vec2 zero, Vec2 extremum, Vec2 asymptote, Segment first, Segment second,
                     double stiffness)
      : zero_(zero), extremum_(extremum), asymptote_(asymptote), f0_(first), f1_(second),
        stiffness_(stiffness) {}

  Vec2 zero_, extremum_, asymptote_;
  Segment f0_, f1_;
  double stiffness_ = 0.0;
};

struct TireForces {
  double longitudinal = 0.0;  // N along wheel heading, acting on the vehicle
  double lateral = 0.0;  // N along wheel left axis, acting on the vehicle
  double slip_x = 0.0;
  double slip_y = 0.0;
};

inline constexpr double kSlipSpeedEpsilon = 0.1;

/// Slips from wheel-frame contact velocity and forces from the friction curve scaled by
/// the normal load. Denominators are guarded by eps; lateral force tapers below eps.
TireForces tire_forces(double omega, double vx, double vy, double radius,
                       const TireFrictionSpline& spline, double normal_load,
                       double eps = kSlipSpeedEpsilon);

// ---------------------------------------------------------------------------
// Aero

struct AeroParams {
  double drag_max = 3000.0;
  double drag_idle = 60.0;
  double drag_reverse = 3000.0;
  double max_speed = 30.0;
  double reverse_speed = 6.0;
  double angular_drag = 300.0;  // N m s/rad
  double downforce_coeff = 2.0;  // N s/m
};

enum class AeroCase { top_speed, idle, reverse_overspeed, nominal };

struct AeroInput {
  double speed = 0.0;  // magnitude, m/s
  double output_torque = 0.0;  // tau_out
  Gear gear;
  double wheel_rpm = 0.0;
  Vec3 angular_velocity = Vec3::Zero();
};

struct AeroOutput {
  double drag = 0.0;  // magnitude, opposes motion
  AeroCase which = AeroCase::nominal;
  Vec3 angular_drag = Vec3::Zero();  // opposes angular velocity
  double downforce = 0.0;
};

AeroOutput aero_forces(const AeroInput& in, const AeroParams& params);

// ---------------------------------------------------------------------------
// Vehicle

inline constexpr std::size_t kWheelCount = 4;
enum WheelIndex : std::size_t { front_left = 0, front_right = 1, rear_left = 2, rear_right = 3 };

struct VehicleConfig {
  int config_version = 1;
  std::array<SprungMass, 4> sprung_masses{{{160.0, {1.3, 0.85, 0.0}},
                                           {160.0, {1.3, -0.85, 0.0}},
                                           {190.0, {-1.3, 0.85, 0.0}},
                                           {190.0, {-1.3, -0.85, 0.0}}}};
  // Suspension top mounts in the same reference frame as the sprung masses.
  std::array<Vec3, 4> wheel_mounts{{{1.3, 0.85, -0.1}, {1.3, -0.85, -0.1},
                                    {-1.3, 0.85, -0.1}, {-1.3, -0.85, -0.1}}};
  std::array<SuspensionParams, 4> suspension{};
  PowertrainParams powertrain;
  SteeringParams steering;
  BrakeParams brake;
  TireFrictionSpline tire;
  AeroParams aero;
  // Footprint box in the reference frame (x forward), used for DTC and collisions.
  double front_overhang = 1.85;  // from the COM to the front bumper
  double rear_overhang = 1.7;
  double body_width = 1.85;
  double body_height = 1.9;
  double fixed_dt = 0.01;

  void validate() const;
};

struct VehicleCommand {
  double throttle = 0.0;  // [0, 1]
  double steering = 0.0;  // [-1, 1], positive = right
  double brake = 0.0;  // [0, 1]
  bool handbrake = false;
  bool reverse = false;

  bool operator==(const VehicleCommand&) const = default;
};

struct WheelState {
  WheelVertical vertical;
  double omega = 0.0;  // rad/s
  double revolutions = 0.0;  // accumulated
  double steer = 0.0;  // wheel yaw relative to the body, rad (positive = left)
  double slip_x = 0.0;
  double slip_y = 0.0;
  bool grounded = true;
  double attach_z = 0.0;
  double contact_z = 0.0;  // contact point z in the mount frame
  double travel = 0.0;
  double normal_load = 0.0;
  double drive_torque = 0.0;
  double brake_torque = 0.0;
};

struct VehicleState {
  double time = 0.0;
  Pose pose = Pose::Identity();  // world <- body (COM frame)
  Vec3 velocity = Vec3::Zero();  // world frame
  Vec3 angular_velocity = Vec3::Zero();  // body frame
  std::array<WheelState, 4> wheels{};
  PowertrainState powertrain;
  double steering_angle = 0.0;
  VehicleCommand command;
  AeroCase aero_case = AeroCase::nominal;

  Vec3 body_velocity() const { return pose.linear().transpose() * velocity; }
  double forward_speed() const { return body_velocity().x(); }
  double speed() const { return velocity.norm(); }
  double planar_speed() const { return velocity.head<2>().norm(); }
};

/// Derived per-vehicle constants computed once from a VehicleConfig.
struct VehicleModel {
  VehicleConfig config;
  ComProperties com;
  std::array<double, 4> corner_mass{};
  std::array<Vec3, 4> mounts{};  // COM frame
  std::array<SuspensionCoefficients, 4> coeffs{};
  std::array<double, 4> travel_limit{};
  std::array<double, 4> application_depth{};
  std::array<double, 4> wheel_inertia{};

  explicit VehicleModel(VehicleConfig cfg);
};

/// Vehicle resting on the terrain at (x, y) with heading `yaw`, wheels at static equilibrium.
VehicleState make_rest_state(const VehicleModel& model, const environment::TerrainHeightmap& terrain,
                             double x, double y, double yaw);

/// Fixed-step semi-implicit Euler update of the full vehicle.
/// Throws SimulationFault on non-finite forces or state, QueryError off the terrain.
void integrate_step(VehicleState& state, const VehicleModel& model,
                    const environment::TerrainHeightmap& terrain, double dt,
                    double traction = 1.0);

// ---------------------------------------------------------------------------
// Configuration file (JSON, versioned)

VehicleConfig load_vehicle_config(const std::string& path);
VehicleConfig vehicle_config_from_json(const std::string& text);
std::string vehicle_config_to_json(const VehicleConfig& config);

}  // namespace twinforge::dynamics
