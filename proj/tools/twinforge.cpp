#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "twinforge/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace twinforge;
using namespace twinforge::orchestrator;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct Factors {
  std::string models;
  std::string weathers;
  std::string times;

  void add_to(CLI::App* app) {
    app->add_option("--models", models, "Comma-separated perception models (default: all)");
    app->add_option("--weathers", weathers, "Comma-separated weather conditions (default: all)");
    app->add_option("--times", times, "Comma-separated times of day, e.g. 00:00,12:00 (default: all)");
  }

  std::vector<TestCase> expand(const std::string& scenario) const {
    std::vector<autonomy::ModelId> m;
    std::vector<environment::Weather> w;
    std::vector<environment::TimeOfDay> t;
    if (models.empty()) {
      m.assign(autonomy::kAllModels.begin(), autonomy::kAllModels.end());
    } else {
      for (const auto& s : split_list(models)) {
        const auto v = autonomy::parse_model(s);
        if (!v) throw UsageError("unknown model '" + s + "'");
        m.push_back(*v);
      }
    }
    if (weathers.empty()) {
      w.assign(environment::kAllWeathers.begin(), environment::kAllWeathers.end());
    } else {
      for (const auto& s : split_list(weathers)) {
        const auto v = environment::parse_weather(s);
        if (!v) throw UsageError("unknown weather '" + s + "'");
        w.push_back(*v);
      }
    }
    if (times.empty()) {
      t.assign(environment::kAllTimes.begin(), environment::kAllTimes.end());
    } else {
      for (const auto& s : split_list(times)) {
        const auto v = environment::parse_time(s);
        if (!v) throw UsageError("unknown time of day '" + s + "'");
        t.push_back(*v);
      }
    }
    if (m.empty() || w.empty() || t.empty()) throw UsageError("factor lists must be nonempty");
    return expand_matrix(m, w, t, scenario);
  }
};

struct InputPaths {
  std::string scenario;
  std::string presets;
  std::string vehicle;

  void add_to(CLI::App* app) {
    app->add_option("--scenario", scenario, "Scenario JSON file");
    app->add_option("--preset-file", presets, "Perception preset JSON file");
    app->add_option("--vehicle", vehicle, "Vehicle configuration JSON file");
  }

  EpisodeInputs load() const {
    EpisodeInputs in;
    try {
      if (!scenario.empty()) in.scenario = environment::load_scenario(scenario);
      if (!presets.empty()) in.presets = autonomy::load_presets(presets);
      if (!vehicle.empty()) in.vehicle = dynamics::load_vehicle_config(vehicle);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    return in;
  }

  std::string scenario_name() const {
    return scenario.empty() ? "default" : fs::path(scenario).stem().string();
  }
};

std::string self_executable(const char* argv0) {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? std::string(argv0) : p.string();
}

std::size_t logical_cores() {
  const long n = sysconf(_SC_NPROCESSORS_ONLN);
  return n > 0 ? static_cast<std::size_t>(n) : 1;
}

std::string verdict_line(const metrics::Verdict& v) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s collisions=%d min_dtc=%.3f stop_margin=%.3f aeb=%d duration=%.2f",
                v.passed ? "PASS" : "FAIL", v.collision_count, v.min_dtc, v.stop_margin,
                v.aeb_triggered ? 1 : 0, v.duration);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-twin scenario sweep harness for off-road autonomy"};
  app.require_subcommand(1);

  // matrix
  Factors matrix_factors;
  std::string matrix_out = "matrix.json";
  std::string matrix_scenario = "default";
  auto* matrix_cmd = app.add_subcommand("matrix", "Expand the test matrix and write it as JSON");
  matrix_factors.add_to(matrix_cmd);
  matrix_cmd->add_option("--out", matrix_out, "Output path");
  matrix_cmd->add_option("--scenario", matrix_scenario, "Scenario reference recorded per case");

  // run
  std::string run_case;
  std::string run_model, run_weather, run_time;
  std::string run_out;
  bool run_full_scans = false;
  std::optional<std::uint64_t> run_seed;
  InputPaths run_inputs;
  auto* run_cmd = app.add_subcommand("run", "Run a single case in-process");
  run_cmd->add_option("case_id", run_case, "Case id, e.g. v3-clear-1200");
  run_cmd->add_option("--model", run_model);
  run_cmd->add_option("--weather", run_weather);
  run_cmd->add_option("--time", run_time);
  run_cmd->add_option("--out", run_out, "Telemetry CSV path (default: <case_id>.csv)");
  run_cmd->add_flag("--full-scans", run_full_scans, "Also dump every LIDAR scan as ASCII");
  run_cmd->add_option("--seed-override", run_seed, "Replace the case seed (non-reproducible)");
  run_inputs.add_to(run_cmd);

  // batch
  Factors batch_factors;
  std::string batch_matrix;
  std::size_t batch_workers = 0;
  std::size_t batch_size = 0;
  std::string batch_out = "twinforge_out";
  std::string batch_mode = "process";
  int batch_port = 0;
  std::optional<std::uint64_t> batch_seed;
  InputPaths batch_inputs;
  auto* batch_cmd = app.add_subcommand("batch", "Run a batched sweep through the control plane");
  batch_factors.add_to(batch_cmd);
  batch_cmd->add_option("--matrix", batch_matrix, "Matrix JSON written by 'matrix'");
  batch_cmd->add_option("--workers", batch_workers, "Parallel workers (default: logical cores)")
      ->envname("TWINFORGE_WORKERS");
  batch_cmd->add_option("--batch-size", batch_size, "Cases per batch (default: min(16, cores))");
  batch_cmd->add_option("--out", batch_out, "Output directory");
  batch_cmd->add_option("--mode", batch_mode, "Worker isolation: process or thread")
      ->check(CLI::IsMember({"process", "thread"}));
  batch_cmd->add_option("--port", batch_port, "Control-plane port (0 picks a free one)")
      ->envname("TWINFORGE_PORT");
  batch_cmd->add_option("--seed-override", batch_seed, "Replace every case seed (non-reproducible)");
  batch_inputs.add_to(batch_cmd);

  // report
  std::string report_dir = "twinforge_out";
  std::string report_channel;
  std::size_t report_stride = 10;
  auto* report_cmd = app.add_subcommand("report", "Re-aggregate a sweep from its stored CSVs");
  report_cmd->add_option("--out", report_dir, "Sweep output directory");
  report_cmd->add_option("--export", report_channel, "Also write <channel>.csv in long format");
  report_cmd->add_option("--stride", report_stride, "Row stride for the channel export");

  // bench
  int ramp_n = 4;
  double ramp_interval = 5.0;
  double sample_period = 1.0;
  std::string bench_out = "bench.csv";
  InputPaths bench_inputs;
  auto* bench_cmd = app.add_subcommand("bench", "Ramp-down utilization benchmark");
  bench_cmd->add_option("--ramp-n", ramp_n, "Initial concurrent instances");
  bench_cmd->add_option("--ramp-interval", ramp_interval, "Seconds between instance drops");
  bench_cmd->add_option("--sample-period", sample_period, "Sampling period in seconds");
  bench_cmd->add_option("--out", bench_out, "Utilization CSV path");
  bench_inputs.add_to(bench_cmd);

  // worker (spawned by batch)
  std::string worker_case, worker_host = "127.0.0.1", worker_id = "worker";
  int worker_port = 0;
  InputPaths worker_inputs;
  auto* worker_cmd = app.add_subcommand("worker", "");
  worker_cmd->group("");
  worker_cmd->add_option("--case", worker_case)->required();
  worker_cmd->add_option("--host", worker_host);
  worker_cmd->add_option("--port", worker_port)->required();
  worker_cmd->add_option("--worker-id", worker_id);
  worker_inputs.add_to(worker_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*matrix_cmd) {
      const auto cases = matrix_factors.expand(matrix_scenario);
      std::ofstream f(matrix_out);
      f << matrix_to_json(cases) << "\n";
      if (!f) throw UsageError("cannot write " + matrix_out);
      std::cout << cases.size() << " cases written to " << matrix_out << "\n";
      return kExitOk;
    }

    if (*run_cmd) {
      std::optional<TestCase> tc;
      if (!run_case.empty()) {
        tc = parse_case_id(run_case, run_inputs.scenario_name());
        if (!tc) throw UsageError("invalid case id '" + run_case + "'");
      } else {
        const auto m = autonomy::parse_model(run_model);
        const auto w = environment::parse_weather(run_weather);
        const auto t = environment::parse_time(run_time);
        if (!m || !w || !t) throw UsageError("give a case id or valid --model/--weather/--time");
        tc = make_case(*m, *w, *t, run_inputs.scenario_name());
      }
      const EpisodeInputs inputs = run_inputs.load();
      EpisodeOptions opts;
      opts.seed_override = run_seed;
      const std::string csv_path = run_out.empty() ? tc->case_id + ".csv" : run_out;
      std::ofstream scans;
      if (run_full_scans) {
        scans.open(csv_path + ".scans.txt");
        opts.scan_dump = &scans;
      }
      EpisodeResult r;
      try {
        r = run_episode(*tc, inputs, opts);
      } catch (const SimulationFault& e) {
        std::cerr << "simulation fault: " << e.what() << "\n";
        return kExitFailure;
      }
      std::ofstream f(csv_path, std::ios::binary);
      f << r.csv;
      if (!f) {
        std::cerr << "cannot write " << csv_path << "\n";
        return kExitFailure;
      }
      if (run_seed) std::cout << "# non-reproducible: seed override " << *run_seed << "\n";
      std::cout << verdict_line(r.verdict) << "\n";
      return kExitOk;
    }

    if (*batch_cmd) {
      std::vector<TestCase> cases;
      if (!batch_matrix.empty()) {
        try {
          cases = matrix_from_json(read_file(batch_matrix));
        } catch (const ConfigError& e) {
          throw UsageError(batch_matrix + ": " + e.what());
        }
      } else {
        cases = batch_factors.expand(batch_inputs.scenario_name());
      }
      const EpisodeInputs inputs = batch_inputs.load();
      BatchOptions opts;
      opts.workers = batch_workers ? batch_workers : logical_cores();
      opts.batch_size = batch_size ? batch_size : default_batch_size();
      opts.mode = batch_mode == "thread" ? WorkerMode::thread : WorkerMode::process;
      opts.out_dir = batch_out;
      opts.port = batch_port;
      opts.worker_executable = self_executable(argv[0]);
      opts.scenario_path = batch_inputs.scenario;
      opts.preset_path = batch_inputs.presets;
      opts.vehicle_path = batch_inputs.vehicle;
      if (batch_seed) {
        opts.overrides = nlohmann::json{{"seed", *batch_seed}}.dump();
        opts.non_reproducible = true;
      }
      opts.log = &std::cerr;
      const auto result = run_batch(cases, inputs, opts);
      std::cout << result.report.text();
      std::printf("started %s, finished %s, wall time %.2f s\n", result.started_at.c_str(),
                  result.finished_at.c_str(), result.wall_seconds);
      for (const auto& [id, diag] : result.diagnostics) {
        std::cerr << "case " << id << " failed: " << diag << "\n";
      }
      return result.exit_code;
    }

    if (*report_cmd) {
      const fs::path dir(report_dir);
      const fs::path matrix_path = dir / "matrix.json";
      if (!fs::exists(matrix_path)) throw UsageError("no matrix.json in " + report_dir);
      std::vector<TestCase> cases;
      try {
        cases = matrix_from_json(read_file(matrix_path));
      } catch (const ConfigError& e) {
        throw UsageError(matrix_path.string() + ": " + e.what());
      }
      if (cases.empty()) throw UsageError("empty matrix in " + report_dir);
      std::size_t batch = 16;
      const fs::path timing = dir / "timing.json";
      if (fs::exists(timing)) {
        try {
          batch = nlohmann::json::parse(read_file(timing)).value("batch_size", batch);
        } catch (const nlohmann::json::exception&) {
          throw UsageError(timing.string() + ": corrupt timing summary");
        }
      }
      std::map<std::string, metrics::Verdict> verdicts;
      std::map<std::string, std::vector<metrics::TelemetryRecord>> series;
      for (const auto& c : cases) {
        const fs::path csv_path = dir / "cases" / (c.case_id + ".csv");
        if (!fs::exists(csv_path)) continue;
        const std::string text = read_file(csv_path);
        try {
          verdicts.emplace(c.case_id, metrics::evaluate_verdict_csv(c.case_id, text));
          if (!report_channel.empty()) series.emplace(c.case_id, metrics::parse_csv(text));
        } catch (const std::exception& e) {
          throw UsageError("corrupt CSV " + csv_path.string() + ": " + e.what());
        }
      }
      if (verdicts.empty()) throw UsageError("no case CSVs found in " + (dir / "cases").string());
      const auto plan = schedule_batches(cases, batch);
      const auto report = metrics::aggregate_report(report_cases(plan), verdicts);
      std::cout << report.text();
      std::ofstream(dir / "report.txt") << report.text();
      std::ofstream(dir / "report.json") << report.json() << "\n";
      if (!report_channel.empty()) {
        std::string exported;
        try {
          exported = metrics::export_channel(report_channel, series, report_stride);
        } catch (const std::exception& e) {
          throw UsageError(e.what());
        }
        std::ofstream(dir / (report_channel + ".csv")) << exported;
      }
      return kExitOk;
    }

    if (*bench_cmd) {
      const EpisodeInputs inputs = bench_inputs.load();
      BenchOptions opts;
      opts.start_instances = ramp_n;
      opts.drop_interval = ramp_interval;
      opts.sample_period = sample_period;
      const auto result = ramp_bench(inputs, opts);
      std::ofstream f(bench_out);
      f << result.csv();
      if (!f) throw UsageError("cannot write " + bench_out);
      std::printf("%zu samples over %.1f s written to %s; single-instance step rate %.0f steps/s\n",
                  result.samples.size(), result.duration, bench_out.c_str(),
                  result.single_instance_step_rate());
      return kExitOk;
    }

    if (*worker_cmd) {
      WorkerOptions opts;
      opts.host = worker_host;
      opts.port = worker_port;
      opts.worker_id = worker_id;
      opts.inputs = worker_inputs.load();
      const auto outcome = run_worker(worker_case, opts);
      if (outcome.infrastructure) {
        std::cerr << "worker " << worker_id << ": " << outcome.diagnostic << "\n";
        return kExitUsage;
      }
      return outcome.ok ? kExitOk : kExitFailure;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
