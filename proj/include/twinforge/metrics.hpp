#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "twinforge/common.hpp"
#include "twinforge/environment.hpp"

namespace twinforge::metrics {

/// Raised for unparsable or inconsistent telemetry.
class TelemetryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TelemetryRecord {
  double t = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
  double roll = 0.0, pitch = 0.0, yaw = 0.0;
  double speed = 0.0;  // signed, along the body x axis
  double throttle = 0.0, steering = 0.0, brake = 0.0, handbrake = 0.0;
  int gear = 0;
  double engine_rpm = 0.0;
  int detection_count = 0;
  double best_confidence = 0.0;
  double best_area_px = 0.0;
  int aeb_active = 0;
  double dtc = 0.0;  // +inf when no obstacle lies ahead
  int collision_count = 0;
  int lights = 0;
  double lidar_min_front = 0.0;  // +inf without a return
};

const std::vector<std::string>& telemetry_columns();
std::string csv_header();
/// One CSV line (no newline), 6 decimals for real-valued columns.
std::string format_record(const TelemetryRecord& r);

/// Appends records to a CSV stream, writing the header first.
class TelemetrySink {
 public:
  explicit TelemetrySink(std::ostream& out);
  /// Throws TelemetryError if time does not advance or the stream fails.
  void log_step(const TelemetryRecord& r);
  std::size_t count() const { return count_; }

 private:
  std::ostream& out_;
  std::size_t count_ = 0;
  double last_t_ = -1.0;
};

std::vector<TelemetryRecord> parse_csv(std::string_view text);

struct Footprint {
  double front = 1.85;  // COM to front face, m
  double rear = 1.7;
  double half_width = 0.925;
};

/// Gap from the front face of the ego footprint to the obstacle box along the ego heading,
/// negative when overlapping, +inf when the obstacle is not in the ego's swept path ahead.
double compute_dtc(const Pose& ego, const Footprint& footprint,
                   const environment::Obstacle& obstacle);

/// Planar overlap of the ego footprint and the obstacle box (separating axis test).
bool footprints_overlap(const Pose& ego, const Footprint& footprint,
                        const environment::Obstacle& obstacle);

struct Verdict {
  std::string case_id;
  bool passed = false;
  int collision_count = 0;
  double min_dtc = 0.0;
  bool aeb_triggered = false;
  double stop_margin = 0.0;
  double duration = 0.0;
};

Verdict evaluate_verdict(std::string_view case_id, const std::vector<TelemetryRecord>& records);
Verdict evaluate_verdict_csv(std::string_view case_id, std::string_view csv);

std::string verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const std::string& text);

/// "71.88" for 46 / 64.
std::string format_rate(int passed, int total);

struct ReportCase {
  std::string case_id;
  std::string model;
  std::string weather;
  std::string time;
  int batch = 0;  // 1-based
};

enum class CaseStatus { passed, failed, infrastructure };

struct BatchRow {
  int batch = 0;
  std::string unit;
  int passed = 0;
  int total = 0;
  int aeb_triggered = 0;
  int infrastructure = 0;
};

struct ModelRow {
  std::string model;
  int passed = 0;
  int total = 0;
  int aeb_triggered = 0;
};

struct Report {
  std::vector<BatchRow> batches;
  std::vector<ModelRow> models;
  std::vector<std::string> infrastructure_failures;
  int passed = 0;
  int total = 0;
  bool non_reproducible = false;
  std::map<std::string, Verdict> verdicts;

  std::string text() const;
  std::string json() const;
};

Report aggregate_report(const std::vector<ReportCase>& matrix,
                        const std::map<std::string, Verdict>& verdicts,
                        bool non_reproducible = false);

/// Long-format "case_id,t,value" export of one telemetry channel, every `stride`-th row.
std::string export_channel(std::string_view channel,
                           const std::map<std::string, std::vector<TelemetryRecord>>& series,
                           std::size_t stride = 10);

}  // namespace twinforge::metrics
