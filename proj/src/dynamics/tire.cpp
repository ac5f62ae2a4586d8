#include <algorithm>
#include <cmath>

#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

namespace {

// Expands a cubic in t = s - s0 into absolute coefficients of s.
TireFrictionSpline::Segment shift(double a, double b, double c, double d, double s0) {
  return {a, b - 3.0 * a * s0, c - 2.0 * b * s0 + 3.0 * a * s0 * s0,
          d - c * s0 + b * s0 * s0 - a * s0 * s0 * s0};
}

}  // namespace

TireFrictionSpline TireFrictionSpline::fit(Vec2 zero, Vec2 extremum, Vec2 asymptote,
                                           double stiffness) {
  if (!(zero.x() < extremum.x() && extremum.x() < asymptote.x())) {
    throw ConfigError("tire knots must have strictly increasing slip");
  }
  const double h = extremum.x() - zero.x();
  const double rise = extremum.y() - zero.y();
  const double a0 = -rise / (2.0 * h * h * h);
  const double c0 = 1.5 * rise / h;

  const double w = asymptote.x() - extremum.x();
  const double fall = asymptote.y() - extremum.y();
  const double a1 = -2.0 * fall / (w * w * w);
  const double b1 = 3.0 * fall / (w * w);

  return from_coefficients(zero, extremum, asymptote, shift(a0, 0.0, c0, zero.y(), zero.x()),
                           shift(a1, b1, 0.0, extremum.y(), extremum.x()), stiffness);
}

TireFrictionSpline TireFrictionSpline::from_coefficients(Vec2 zero, Vec2 extremum, Vec2 asymptote,
                                                         Segment first, Segment second,
                                                         double stiffness) {
  return TireFrictionSpline(zero, extremum, asymptote, first, second, stiffness);
}

double TireFrictionSpline::operator()(double slip) const {
  if (slip <= zero_.x()) return zero_.y();
  if (slip >= asymptote_.x()) return asymptote_.y();
  return slip <= extremum_.x() ? f0_(slip) : f1_(slip);
}

TireForces tire_forces(double omega, double vx, double vy, double radius,
                       const TireFrictionSpline& spline, double normal_load, double eps) {
  TireForces out;
  const double denom = std::max(std::abs(vx), eps);
  const double slip_speed = radius * omega - vx;
  out.slip_x = slip_speed / denom;
  out.slip_y = vy / denom;
  const double load = std::max(normal_load, 0.0);

  // Forces fade out linearly as the slip velocity goes to zero so they cannot chatter.
  const double taper_x = std::min(1.0, std::abs(slip_speed) / eps);
  const double taper_y = std::min(1.0, std::abs(vy) / eps);
  out.longitudinal = std::copysign(spline(std::abs(out.slip_x)), out.slip_x) * load * taper_x;
  out.lateral = -std::copysign(spline(std::abs(out.slip_y)), out.slip_y) * load * taper_y;
  return out;
}

}  // namespace twinforge::dynamics
