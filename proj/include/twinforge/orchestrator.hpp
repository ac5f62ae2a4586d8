#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "twinforge/autonomy.hpp"
#include "twinforge/dynamics.hpp"
#include "twinforge/environment.hpp"
#include "twinforge/metrics.hpp"
#include "twinforge/sensors.hpp"

namespace httplib {
class Server;
}

namespace twinforge::orchestrator {

// ---------------------------------------------------------------------------
// Test matrix

struct TestCase {
  std::string case_id;
  autonomy::ModelId model = autonomy::ModelId::v3;
  environment::Weather weather = environment::Weather::clear;
  environment::TimeOfDay time = environment::TimeOfDay::t1200;
  std::uint64_t seed = 0;
  std::string scenario = "default";

  bool operator==(const TestCase&) const = default;
};

/// "{model}-{weather}-{HHMM}", e.g. "v3_tiny-thick_fog-0000".
std::string make_case_id(autonomy::ModelId model, environment::Weather weather,
                         environment::TimeOfDay time);
TestCase make_case(autonomy::ModelId model, environment::Weather weather,
                   environment::TimeOfDay time, const std::string& scenario = "default");
std::optional<TestCase> parse_case_id(std::string_view id, const std::string& scenario = "default");

/// Cartesian product ordered by (model, time, weather) so that each batch of 16 holds one
/// model at two times of day across all weathers.
std::vector<TestCase> expand_matrix(std::span<const autonomy::ModelId> models,
                                    std::span<const environment::Weather> weathers,
                                    std::span<const environment::TimeOfDay> times,
                                    const std::string& scenario = "default");
std::vector<TestCase> default_matrix();

struct BatchPlan {
  std::vector<std::vector<TestCase>> batches;
  std::size_t batch_size = 16;
  std::size_t worker_count = 1;
};

BatchPlan schedule_batches(const std::vector<TestCase>& cases, std::size_t batch_size,
                           std::size_t worker_count = 1);
/// min(16, logical cores).
std::size_t default_batch_size();

std::string matrix_to_json(const std::vector<TestCase>& cases);
std::vector<TestCase> matrix_from_json(const std::string& text);
std::vector<metrics::ReportCase> report_cases(const BatchPlan& plan);

// ---------------------------------------------------------------------------
// Episode

struct EpisodeInputs {
  environment::Scenario scenario;
  dynamics::VehicleConfig vehicle;
  autonomy::PresetFile presets = autonomy::default_presets();
  sensors::CameraConfig camera;
  sensors::LidarConfig lidar;
  autonomy::LaneKeeping lane;
};

struct EpisodeOptions {
  bool keep_csv = true;
  /// Receives one ASCII block per LIDAR scan when set.
  std::ostream* scan_dump = nullptr;
  std::optional<std::uint64_t> seed_override;
};

enum class Termination { running, aeb_stop, collision_standstill, timeout };
std::string_view to_string(Termination t);

/// Stepwise episode: the ego cruises toward the obstacle under the autonomy stack.
class Episode {
 public:
  Episode(const TestCase& test_case, const EpisodeInputs& inputs, EpisodeOptions options = {});

  /// Advances one physics step and logs it. Returns false once a terminal condition holds.
  bool step();
  void run();

  Termination termination() const { return termination_; }
  std::size_t steps() const { return steps_; }
  const metrics::TelemetryRecord& last_record() const { return last_; }
  const dynamics::VehicleState& vehicle() const { return state_; }
  const environment::Scene& scene() const { return scene_; }
  const environment::EnvironmentCondition& condition() const { return condition_; }
  std::string csv() const { return csv_.str(); }
  std::size_t memory_bytes() const;

 private:
  void camera_frame();
  void lidar_scan();
  void resolve_collisions();

  TestCase case_;
  EpisodeInputs inputs_;
  EpisodeOptions options_;
  dynamics::VehicleModel model_;
  environment::Scene scene_;
  environment::EnvironmentCondition condition_;
  autonomy::Lights lights_ = autonomy::Lights::off;
  const autonomy::PerceptionModelPreset* preset_ = nullptr;
  autonomy::AebPlanner planner_;
  CounterRng rng_;
  dynamics::VehicleState state_;
  metrics::Footprint footprint_;
  std::vector<Vec3> obstacle_velocity_;
  std::vector<bool> overlapping_;
  mutable std::ostringstream csv_;
  std::unique_ptr<metrics::TelemetrySink> sink_;
  metrics::TelemetryRecord last_;
  int collisions_ = 0;
  int detection_count_ = 0;
  double best_confidence_ = 0.0;
  double best_area_ = 0.0;
  double lidar_min_front_ = 0.0;
  long camera_frames_ = -1;
  long lidar_scans_ = -1;
  std::size_t steps_ = 0;
  double dt_ = 0.01;
  std::optional<double> stop_time_;
  double standstill_since_ = -1.0;
  Termination termination_ = Termination::running;
};

struct EpisodeResult {
  std::string csv;
  metrics::Verdict verdict;
  Termination termination = Termination::running;
  std::size_t steps = 0;
  double wall_seconds = 0.0;
};

EpisodeResult run_episode(const TestCase& test_case, const EpisodeInputs& inputs,
                          const EpisodeOptions& options = {});

/// Applies control-plane overrides ({"cruise_speed", "t_max", "post_stop_window", "weather",
/// "time", "model", "seed"}) to a case and its inputs. Throws ConfigError on bad keys or values.
void apply_overrides(const std::string& overrides_json, TestCase& test_case,
                     EpisodeInputs& inputs);

// ---------------------------------------------------------------------------
// Control plane

enum class CaseStatus { pending, running, done, failed };
std::string_view to_string(CaseStatus s);

struct WorkerInfo {
  std::string id;
  std::string address;
};

using WorkerEnumerator = std::function<std::vector<WorkerInfo>()>;

struct CaseRecord {
  TestCase test_case;
  CaseStatus status = CaseStatus::pending;
  std::string worker;
  std::string overrides = "{}";
  std::optional<metrics::Verdict> verdict;
  std::string csv;
  std::string diagnostic;
  bool infrastructure = false;
  int summaries = 0;
};

/// HTTP control server over a coarse-locked case store.
class ControlPlane {
 public:
  explicit ControlPlane(std::vector<TestCase> cases, WorkerEnumerator enumerator = {});
  ~ControlPlane();
  ControlPlane(const ControlPlane&) = delete;
  ControlPlane& operator=(const ControlPlane&) = delete;

  /// Binds and serves in a background thread; port 0 picks a free port. Returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  int port() const { return port_; }

  void set_worker_enumerator(WorkerEnumerator e);
  /// Merges overrides into every pending case. Throws ConfigError on invalid overrides.
  void set_overrides(const std::string& overrides_json);
  /// Marks a case failed from the supervising side (worker crash, lost worker).
  void mark_failed(const std::string& case_id, const std::string& diagnostic, bool infrastructure);

  std::optional<CaseRecord> record(const std::string& case_id) const;
  std::map<std::string, metrics::Verdict> verdicts() const;
  std::map<std::string, std::string> csvs() const;
  std::size_t terminal_count() const;
  std::size_t warning_count() const;
  std::vector<WorkerInfo> workers() const;

 private:
  void install_routes();

  mutable std::mutex mu_;
  std::map<std::string, CaseRecord> cases_;
  std::vector<std::string> order_;
  WorkerEnumerator enumerator_;
  std::vector<WorkerInfo> workers_;
  std::size_t warnings_ = 0;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

// ---------------------------------------------------------------------------
// Worker

struct WorkerOptions {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string worker_id = "worker";
  int max_retries = 3;
  int retry_delay_ms = 100;
  int timeout_seconds = 30;
  EpisodeInputs inputs;
};

struct WorkerOutcome {
  bool ok = false;
  bool infrastructure = false;
  std::string diagnostic;
  std::optional<metrics::Verdict> verdict;
};

/// Fetches the case from the control plane, runs it, and posts verdict + CSV.
WorkerOutcome run_worker(const std::string& case_id, const WorkerOptions& options);

// ---------------------------------------------------------------------------
// Batch execution

enum class WorkerMode { process, thread };

struct BatchOptions {
  std::size_t workers = 1;
  std::size_t batch_size = 16;
  WorkerMode mode = WorkerMode::thread;
  std::string out_dir;  // empty: nothing written
  std::string host = "127.0.0.1";
  int port = 0;
  // Process mode: executable and the config paths handed to each worker process.
  std::string worker_executable;
  std::string scenario_path;
  std::string preset_path;
  std::string vehicle_path;
  /// JSON overrides applied to every case before the first batch starts.
  std::string overrides;
  bool non_reproducible = false;
  std::ostream* log = nullptr;
};

struct BatchResult {
  metrics::Report report;
  std::map<std::string, std::string> csvs;
  std::map<std::string, std::string> diagnostics;
  double wall_seconds = 0.0;
  std::string started_at;
  std::string finished_at;
  int exit_code = 0;
};

BatchResult run_batch(const std::vector<TestCase>& cases, const EpisodeInputs& inputs,
                      const BatchOptions& options);

// ---------------------------------------------------------------------------
// Ramp benchmark

struct BenchSample {
  double t = 0.0;
  int instances = 0;
  double cpu_percent = 0.0;
  double rss_mb = 0.0;
  double steps_per_second = 0.0;
};

struct BenchOptions {
  int start_instances = 4;
  double drop_interval = 5.0;  // s
  double sample_period = 1.0;  // s
  TestCase test_case = make_case(autonomy::ModelId::v3, environment::Weather::clear,
                                 environment::TimeOfDay::t1200);
};

struct BenchResult {
  std::vector<BenchSample> samples;
  double duration = 0.0;

  std::string csv() const;
  /// Mean step rate over samples with exactly one instance.
  double single_instance_step_rate() const;
};

BenchResult ramp_bench(const EpisodeInputs& inputs, const BenchOptions& options);

/// Resident set size of this process in bytes (from /proc/self/statm).
std::size_t resident_bytes();
/// User + system CPU time of this process in seconds.
double process_cpu_seconds();

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace twinforge::orchestrator
