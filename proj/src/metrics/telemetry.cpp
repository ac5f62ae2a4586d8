#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "twinforge/metrics.hpp"

namespace twinforge::metrics {

namespace {

void put_real(std::string& out, double v) {
  char buf[64];
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
  } else if (std::isnan(v)) {
    out += "nan";
  } else {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    // Avoid "-0.000000" so digests do not depend on the sign of tiny values.
    if (std::string_view(buf) == "-0.000000") {
      out += "0.000000";
    } else {
      out += buf;
    }
  }
}

void put_int(std::string& out, long v) { out += std::to_string(v); }

double to_real(std::string_view s, std::size_t line) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw TelemetryError("bad number '" + tmp + "' on line " + std::to_string(line));
  }
  return v;
}

int to_int(std::string_view s, std::size_t line) {
  const double v = to_real(s, line);
  if (v != std::floor(v)) {
    throw TelemetryError("expected an integer on line " + std::to_string(line));
  }
  return static_cast<int>(v);
}

}  // namespace

const std::vector<std::string>& telemetry_columns() {
  static const std::vector<std::string> cols{
      "t",        "x",          "y",          "z",           "roll",
      "pitch",    "yaw",        "speed",      "throttle",    "steering",
      "brake",    "handbrake",  "gear",       "engine_rpm",  "detection_count",
      "best_confidence",        "best_area_px",              "aeb_active",
      "dtc",      "collision_count",          "lights",      "lidar_min_front"};
  return cols;
}

std::string csv_header() {
  std::string h;
  for (const auto& c : telemetry_columns()) {
    if (!h.empty()) h += ',';
    h += c;
  }
  return h;
}

std::string format_record(const TelemetryRecord& r) {
  std::string s;
  s.reserve(200);
  auto real = [&](double v) {
    put_real(s, v);
    s += ',';
  };
  auto integer = [&](long v) {
    put_int(s, v);
    s += ',';
  };
  real(r.t);
  real(r.x);
  real(r.y);
  real(r.z);
  real(r.roll);
  real(r.pitch);
  real(r.yaw);
  real(r.speed);
  real(r.throttle);
  real(r.steering);
  real(r.brake);
  real(r.handbrake);
  integer(r.gear);
  real(r.engine_rpm);
  integer(r.detection_count);
  real(r.best_confidence);
  real(r.best_area_px);
  integer(r.aeb_active);
  real(r.dtc);
  integer(r.collision_count);
  integer(r.lights);
  put_real(s, r.lidar_min_front);
  return s;
}

TelemetrySink::TelemetrySink(std::ostream& out) : out_(out) {
  out_ << csv_header() << '\n';
  if (!out_) throw TelemetryError("telemetry sink write failed");
}

void TelemetrySink::log_step(const TelemetryRecord& r) {
  if (!(r.t > last_t_)) throw TelemetryError("telemetry time must increase");
  out_ << format_record(r) << '\n';
  if (!out_) throw TelemetryError("telemetry sink write failed");
  last_t_ = r.t;
  ++count_;
}

std::vector<TelemetryRecord> parse_csv(std::string_view text) {
  std::vector<TelemetryRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const std::size_t ncols = telemetry_columns().size();
  std::vector<std::string_view> f;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != csv_header()) throw TelemetryError("unexpected CSV header");
      continue;
    }
    f.clear();
    std::size_t s = 0;
    while (true) {
      const std::size_t c = line.find(',', s);
      f.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (f.size() != ncols) {
      throw TelemetryError("wrong column count on line " + std::to_string(line_no));
    }
    TelemetryRecord r;
    std::size_t i = 0;
    r.t = to_real(f[i++], line_no);
    r.x = to_real(f[i++], line_no);
    r.y = to_real(f[i++], line_no);
    r.z = to_real(f[i++], line_no);
    r.roll = to_real(f[i++], line_no);
    r.pitch = to_real(f[i++], line_no);
    r.yaw = to_real(f[i++], line_no);
    r.speed = to_real(f[i++], line_no);
    r.throttle = to_real(f[i++], line_no);
    r.steering = to_real(f[i++], line_no);
    r.brake = to_real(f[i++], line_no);
    r.handbrake = to_real(f[i++], line_no);
    r.gear = to_int(f[i++], line_no);
    r.engine_rpm = to_real(f[i++], line_no);
    r.detection_count = to_int(f[i++], line_no);
    r.best_confidence = to_real(f[i++], line_no);
    r.best_area_px = to_real(f[i++], line_no);
    r.aeb_active = to_int(f[i++], line_no);
    r.dtc = to_real(f[i++], line_no);
    r.collision_count = to_int(f[i++], line_no);
    r.lights = to_int(f[i++], line_no);
    r.lidar_min_front = to_real(f[i++], line_no);
    out.push_back(r);
  }
  if (line_no == 0) throw TelemetryError("empty CSV");
  return out;
}

}  // namespace twinforge::metrics
