#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"
#include "twinforge/metrics.hpp"

namespace twinforge::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = kInf;
  double hi = -kInf;
};

Interval project(const std::array<Vec2, 4>& pts, const Vec2& axis) {
  Interval iv;
  for (const auto& p : pts) {
    const double s = p.dot(axis);
    iv.lo = std::min(iv.lo, s);
    iv.hi = std::max(iv.hi, s);
  }
  return iv;
}

Vec2 planar_heading(const Mat3& R) {
  Vec2 f = R.col(0).head<2>();
  const double n = f.norm();
  return n > 1e-12 ? Vec2(f / n) : Vec2(1.0, 0.0);
}

std::array<Vec2, 4> obstacle_corners(const environment::Obstacle& ob) {
  const Mat3 R = ob.pose.linear();
  const Vec2 c = ob.pose.translation().head<2>();
  const Vec2 ax = planar_heading(R) * ob.half_extents.x();
  const Vec2 ay = Vec2(-ax.y(), ax.x()).normalized() * ob.half_extents.y();
  return {c + ax + ay, c + ax - ay, c - ax + ay, c - ax - ay};
}

}  // namespace

double compute_dtc(const Pose& ego, const Footprint& fp, const environment::Obstacle& ob) {
  const Vec2 f = planar_heading(ego.linear());
  const Vec2 l(-f.y(), f.x());
  const Vec2 c = ego.translation().head<2>();
  const auto corners = obstacle_corners(ob);
  std::array<Vec2, 4> rel;
  for (std::size_t i = 0; i < 4; ++i) rel[i] = corners[i] - c;
  const Interval along = project(rel, f);
  const Interval across = project(rel, l);
  if (across.hi < -fp.half_width || across.lo > fp.half_width) return kInf;
  if (along.hi < -fp.rear) return kInf;
  return along.lo - fp.front;
}

bool footprints_overlap(const Pose& ego, const Footprint& fp, const environment::Obstacle& ob) {
  const Vec2 f = planar_heading(ego.linear());
  const Vec2 l(-f.y(), f.x());
  const Vec2 c = ego.translation().head<2>();
  const std::array<Vec2, 4> ego_pts{c + fp.front * f + fp.half_width * l,
                                    c + fp.front * f - fp.half_width * l,
                                    c - fp.rear * f + fp.half_width * l,
                                    c - fp.rear * f - fp.half_width * l};
  const auto ob_pts = obstacle_corners(ob);
  const Vec2 of = planar_heading(ob.pose.linear());
  const std::array<Vec2, 4> axes{f, l, of, Vec2(-of.y(), of.x())};
  for (const auto& axis : axes) {
    const Interval a = project(ego_pts, axis);
    const Interval b = project(ob_pts, axis);
    if (a.hi < b.lo || b.hi < a.lo) return false;
  }
  return true;
}

Verdict evaluate_verdict(std::string_view case_id, const std::vector<TelemetryRecord>& records) {
  if (records.empty()) throw TelemetryError("cannot evaluate an empty telemetry series");
  Verdict v;
  v.case_id = std::string(case_id);
  v.min_dtc = kInf;
  for (const auto& r : records) {
    v.min_dtc = std::min(v.min_dtc, r.dtc);
    v.aeb_triggered = v.aeb_triggered || r.aeb_active != 0;
  }
  const auto& last = records.back();
  v.collision_count = last.collision_count;
  v.duration = last.t;
  v.passed = v.collision_count == 0;
  v.stop_margin = v.passed ? last.dtc : std::min(v.min_dtc, 0.0);
  return v;
}

Verdict evaluate_verdict_csv(std::string_view case_id, std::string_view csv) {
  return evaluate_verdict(case_id, parse_csv(csv));
}

namespace {

nlohmann::json real_json(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double real_from(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string verdict_to_json(const Verdict& v) {
  nlohmann::json j{{"case_id", v.case_id},
                   {"passed", v.passed},
                   {"collision_count", v.collision_count},
                   {"min_dtc", real_json(v.min_dtc)},
                   {"aeb_triggered", v.aeb_triggered},
                   {"stop_margin", real_json(v.stop_margin)},
                   {"duration", v.duration}};
  return j.dump();
}

Verdict verdict_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Verdict v;
    v.case_id = j.at("case_id").get<std::string>();
    v.passed = j.at("passed").get<bool>();
    v.collision_count = j.at("collision_count").get<int>();
    v.min_dtc = real_from(j.at("min_dtc"));
    v.aeb_triggered = j.at("aeb_triggered").get<bool>();
    v.stop_margin = real_from(j.at("stop_margin"));
    v.duration = j.at("duration").get<double>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw TelemetryError(std::string("bad verdict document: ") + e.what());
  }
}

std::string format_rate(int passed, int total) {
  if (total <= 0) return "0.00";
  // Integer arithmetic with round-half-up on hundredths of a percent.
  const long long scaled = (20000LL * passed + total) / (2LL * total);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", scaled / 100, scaled % 100);
  return buf;
}

}  // namespace twinforge::metrics
