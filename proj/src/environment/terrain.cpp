#include <algorithm>
#include <cmath>
#include <limits>

#include "twinforge/environment.hpp"

namespace twinforge::environment {

TerrainHeightmap::TerrainHeightmap(std::size_t nx, std::size_t ny, double cell_size, Vec2 origin,
                                   std::vector<double> heights)
    : nx_(nx), ny_(ny), cell_(cell_size), origin_(std::move(origin)), heights_(std::move(heights)) {
  if (nx_ < 2 || ny_ < 2) throw ConfigError("terrain grid needs at least 2x2 nodes");
  if (!(cell_ > 0.0)) throw ConfigError("terrain cell size must be positive");
  if (heights_.size() != nx_ * ny_) throw ConfigError("terrain height count does not match grid");
  for (double h : heights_) {
    if (!std::isfinite(h)) throw ConfigError("terrain heights must be finite");
  }
}

TerrainHeightmap TerrainHeightmap::flat(double height, double length, double width,
                                        double cell_size, Vec2 origin) {
  return plane(height, 0.0, 0.0, length, width, cell_size, origin);
}

TerrainHeightmap TerrainHeightmap::plane(double z0, double slope_x, double slope_y, double length,
                                         double width, double cell_size, Vec2 origin) {
  const auto nx = static_cast<std::size_t>(std::ceil(length / cell_size)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil(width / cell_size)) + 1;
  std::vector<double> h(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      h[iy * nx + ix] = z0 + slope_x * (static_cast<double>(ix) * cell_size) +
                        slope_y * (static_cast<double>(iy) * cell_size);
    }
  }
  return TerrainHeightmap(nx, ny, cell_size, origin, std::move(h));
}

Vec2 TerrainHeightmap::max_corner() const {
  return origin_ + Vec2(static_cast<double>(nx_ - 1) * cell_, static_cast<double>(ny_ - 1) * cell_);
}

bool TerrainHeightmap::contains(double x, double y) const {
  const Vec2 hi = max_corner();
  return x >= origin_.x() && x <= hi.x() && y >= origin_.y() && y <= hi.y();
}

HeightSample TerrainHeightmap::height_and_gradient(double x, double y) const {
  if (!contains(x, y)) {
    throw QueryError("terrain query out of bounds at (" + std::to_string(x) + ", " +
                     std::to_string(y) + ")");
  }
  const double gx = (x - origin_.x()) / cell_;
  const double gy = (y - origin_.y()) / cell_;
  const auto ix = std::min(static_cast<std::size_t>(gx), nx_ - 2);
  const auto iy = std::min(static_cast<std::size_t>(gy), ny_ - 2);
  const double u = gx - static_cast<double>(ix);
  const double v = gy - static_cast<double>(iy);
  const double h00 = node(ix, iy);
  const double h10 = node(ix + 1, iy);
  const double h01 = node(ix, iy + 1);
  const double h11 = node(ix + 1, iy + 1);

  HeightSample s;
  s.height = h00 * (1 - u) * (1 - v) + h10 * u * (1 - v) + h01 * (1 - u) * v + h11 * u * v;
  s.gradient.x() = ((h10 - h00) * (1 - v) + (h11 - h01) * v) / cell_;
  s.gradient.y() = ((h01 - h00) * (1 - u) + (h11 - h10) * u) / cell_;
  return s;
}

namespace {

// Smallest t in [t0, t1] with q2 t^2 + q1 t + q0 <= 0, given the value at t0 is positive.
std::optional<double> first_crossing(double q2, double q1, double q0, double t0, double t1) {
  auto f = [&](double t) { return (q2 * t + q1) * t + q0; };
  std::array<double, 2> roots{};
  int n = 0;
  const double scale = std::abs(q1) + std::abs(q2) * std::max(std::abs(t0), std::abs(t1));
  if (std::abs(q2) * std::max(1.0, std::abs(t1 - t0)) <= 1e-14 * std::max(scale, 1e-300)) {
    if (q1 != 0.0) roots[n++] = -q0 / q1;
  } else {
    const double disc = q1 * q1 - 4.0 * q2 * q0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (q1 + std::copysign(sq, q1));
      if (q != 0.0) roots[n++] = q0 / q;
      roots[n++] = q / q2;
    }
  }
  std::optional<double> best;
  for (int i = 0; i < n; ++i) {
    const double r = roots[i];
    if (r >= t0 - 1e-12 && r <= t1 + 1e-12) {
      const double rc = std::clamp(r, t0, t1);
      if (!best || rc < *best) best = rc;
    }
  }
  if (!best && f(t1) <= 0.0) {
    // Numerical miss of a tangential root; fall back to bisection.
    double lo = t0, hi = t1;
    for (int i = 0; i < 100 && hi - lo > 1e-9; ++i) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0.0 ? lo : hi) = mid;
    }
    best = hi;
  }
  return best;
}

}  // namespace

std::optional<double> TerrainHeightmap::raycast(const Vec3& o, const Vec3& d,
                                                double max_distance) const {
  const Vec2 lo = origin_;
  const Vec2 hi = max_corner();

  // Clip the ray's xy footprint to the grid rectangle.
  double t_enter = 0.0;
  double t_leave = max_distance;
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t_enter = std::max(t_enter, ta);
    t_leave = std::min(t_leave, tb);
  }
  if (t_enter > t_leave) return std::nullopt;

  const double inv_cell = 1.0 / cell_;
  const Vec2 p_enter(o.x() + d.x() * t_enter, o.y() + d.y() * t_enter);
  auto cell_index = [&](double coord, double origin, std::size_t n, double dir) {
    double g = (coord - origin) * inv_cell;
    auto i = static_cast<long>(std::floor(g));
    // On an exact boundary, pick the cell the ray is heading into.
    if (dir < 0.0 && g == std::floor(g)) i -= 1;
    return std::clamp<long>(i, 0, static_cast<long>(n) - 2);
  };
  long ix = cell_index(p_enter.x(), lo.x(), nx_, d.x());
  long iy = cell_index(p_enter.y(), lo.y(), ny_, d.y());
  const int step_x = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
  const int step_y = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);

  double t = t_enter;
  while (t <= t_leave) {
    const double x0 = lo.x() + static_cast<double>(ix) * cell_;
    const double y0 = lo.y() + static_cast<double>(iy) * cell_;
    double tx = std::numeric_limits<double>::infinity();
    double ty = std::numeric_limits<double>::infinity();
    if (step_x != 0) tx = ((step_x > 0 ? x0 + cell_ : x0) - o.x()) / d.x();
    if (step_y != 0) ty = ((step_y > 0 ? y0 + cell_ : y0) - o.y()) / d.y();
    const double t_exit = std::min({tx, ty, t_leave});

    const double h00 = node(ix, iy);
    const double h10 = node(ix + 1, iy);
    const double h01 = node(ix, iy + 1);
    const double h11 = node(ix + 1, iy + 1);
    const double A = h00, B = h10 - h00, C = h01 - h00, D = h00 - h10 - h01 + h11;
    const double u0 = (o.x() - x0) * inv_cell, du = d.x() * inv_cell;
    const double v0 = (o.y() - y0) * inv_cell, dv = d.y() * inv_cell;
    const double c0 = A + B * u0 + C * v0 + D * u0 * v0;
    const double c1 = B * du + C * dv + D * (u0 * dv + v0 * du);
    const double c2 = D * du * dv;
    // f(t) = ray z - terrain z
    const double q2 = -c2, q1 = d.z() - c1, q0 = o.z() - c0;
    const double f_start = (q2 * t + q1) * t + q0;
    if (f_start <= 0.0) return t;
    if (auto hit = first_crossing(q2, q1, q0, t, t_exit)) return *hit;

    if (t_exit >= t_leave) break;
    if (tx <= ty) {
      ix += step_x;
      if (ix < 0 || ix > static_cast<long>(nx_) - 2) break;
    } else {
      iy += step_y;
      if (iy < 0 || iy > static_cast<long>(ny_) - 2) break;
    }
    t = t_exit;
  }
  return std::nullopt;
}

TerrainHeightmap make_corridor(const CorridorSpec& cs) {
  if (!(cs.length > 0.0) || !(cs.width > 0.0) || !(cs.cell_size > 0.0)) {
    throw ConfigError("corridor dimensions must be positive");
  }
  if (!(cs.wavelength > 0.0)) throw ConfigError("corridor wavelength must be positive");
  const auto nx = static_cast<std::size_t>(std::ceil(cs.length / cs.cell_size)) + 1;
  const auto ny = static_cast<std::size_t>(std::ceil(cs.width / cs.cell_size)) + 1;

  const double k = 2.0 * kPi / cs.wavelength;
  const double amplitude = std::tan(cs.max_grade_deg * kPi / 180.0) / k;

  struct Wave {
    double k, amplitude, phase;
  };
  std::vector<Wave> detail;
  CounterRng rng(cs.seed);
  for (int i = 0; i < cs.detail_waves; ++i) {
    const double wavelength = 30.0 + 50.0 * rng.uniform();
    const double kw = 2.0 * kPi / wavelength;
    const double grade = std::tan(cs.detail_grade_deg * kPi / 180.0) / cs.detail_waves;
    detail.push_back({kw, grade / kw, 2.0 * kPi * rng.uniform()});
  }

  std::vector<double> row(nx);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double x = static_cast<double>(ix) * cs.cell_size;
    double h = cs.base_height + amplitude * std::sin(k * (x - cs.crest_x) + kPi / 2.0);
    for (const auto& w : detail) h += w.amplitude * std::sin(w.k * x + w.phase);
    row[ix] = h;
  }
  std::vector<double> heights(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) std::copy(row.begin(), row.end(), heights.begin() + iy * nx);
  return TerrainHeightmap(nx, ny, cs.cell_size, Vec2(0.0, -cs.width / 2.0), std::move(heights));
}

}  // namespace twinforge::environment
