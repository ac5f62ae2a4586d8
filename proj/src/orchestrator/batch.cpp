#include <spawn.h>
#include <sys/wait.h>

#include <chrono>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>

#include "twinforge/orchestrator.hpp"

#include "json.hpp"

extern char** environ;

namespace twinforge::orchestrator {

namespace fs = std::filesystem;

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

class Registry {
 public:
  void add(const std::string& id, const std::string& address) {
    std::lock_guard lock(mu_);
    active_[id] = address;
  }
  void remove(const std::string& id) {
    std::lock_guard lock(mu_);
    active_.erase(id);
  }
  std::vector<WorkerInfo> list() const {
    std::lock_guard lock(mu_);
    std::vector<WorkerInfo> out;
    for (const auto& [id, addr] : active_) out.push_back({id, addr});
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> active_;
};

// Exit status of the worker process, or -1 if it was killed or could not start.
int spawn_worker(const BatchOptions& o, const std::string& case_id, const std::string& worker_id,
                 int port, pid_t* pid_out) {
  std::vector<std::string> args{o.worker_executable, "worker",      "--case",
                                case_id,             "--host",      o.host,
                                "--port",            std::to_string(port),
                                "--worker-id",       worker_id};
  if (!o.scenario_path.empty()) args.insert(args.end(), {"--scenario", o.scenario_path});
  if (!o.preset_path.empty()) args.insert(args.end(), {"--preset-file", o.preset_path});
  if (!o.vehicle_path.empty()) args.insert(args.end(), {"--vehicle", o.vehicle_path});
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  if (posix_spawn(&pid, o.worker_executable.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
    return -1;
  }
  if (pid_out) *pid_out = pid;
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return -1;
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

BatchResult run_batch(const std::vector<TestCase>& cases, const EpisodeInputs& inputs,
                      const BatchOptions& options) {
  if (options.workers < 1) throw ConfigError("at least one worker is required");
  if (options.batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (options.mode == WorkerMode::process && options.worker_executable.empty()) {
    throw ConfigError("process mode needs the worker executable");
  }

  BatchResult result;
  Registry registry;
  ControlPlane plane(cases, [&registry] { return registry.list(); });
  if (!options.overrides.empty()) plane.set_overrides(options.overrides);
  const int port = plane.start(options.host, options.port);
  const BatchPlan plan = schedule_batches(cases, options.batch_size, options.workers);

  result.started_at = iso_now();
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t batch_index = 0;
  for (const auto& batch : plan.batches) {
    ++batch_index;
    std::mutex qmu;
    std::deque<TestCase> queue(batch.begin(), batch.end());
    const std::size_t pool = std::min(options.workers, batch.size());
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < pool; ++w) {
      threads.emplace_back([&, w] {
        const std::string worker_id = "worker-" + std::to_string(w + 1);
        for (;;) {
          TestCase tc;
          {
            std::lock_guard lock(qmu);
            if (queue.empty()) return;
            tc = queue.front();
            queue.pop_front();
          }
          if (options.mode == WorkerMode::thread) {
            registry.add(worker_id, "thread:" + std::to_string(w + 1));
            WorkerOptions wo;
            wo.host = options.host;
            wo.port = port;
            wo.worker_id = worker_id;
            wo.inputs = inputs;
            const auto outcome = run_worker(tc.case_id, wo);
            if (outcome.infrastructure) {
              plane.mark_failed(tc.case_id, outcome.diagnostic, true);
            }
          } else {
            pid_t pid = 0;
            registry.add(worker_id, "process");
            const int code = spawn_worker(options, tc.case_id, worker_id, port, &pid);
            if (code != 0 && code != 1) {
              plane.mark_failed(tc.case_id,
                                code < 0 ? "worker process crashed or could not start"
                                         : "worker process exited with code " +
                                               std::to_string(code),
                                true);
            }
          }
          registry.remove(worker_id);
        }
      });
    }
    for (auto& t : threads) t.join();
    if (options.log) {
      *options.log << "batch " << batch_index << "/" << plan.batches.size() << " done ("
                   << plane.terminal_count() << "/" << cases.size() << " cases)\n";
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.finished_at = iso_now();

  bool any_infra = false;
  bool any_failed = false;
  for (const auto& c : cases) {
    const auto rec = plane.record(c.case_id);
    if (!rec || rec->status != CaseStatus::done) {
      any_failed = true;
      if (!rec || rec->status != CaseStatus::failed || rec->infrastructure) any_infra = true;
      result.diagnostics[c.case_id] = rec ? rec->diagnostic : "case missing";
    }
  }
  result.csvs = plane.csvs();
  result.report = metrics::aggregate_report(report_cases(plan), plane.verdicts(),
                                            options.non_reproducible);
  result.exit_code = any_infra ? 2 : (any_failed ? 1 : 0);
  plane.stop();

  if (!options.out_dir.empty()) {
    const fs::path out(options.out_dir);
    fs::create_directories(out / "cases");
    for (const auto& [id, csv] : result.csvs) write_file(out / "cases" / (id + ".csv"), csv);
    write_file(out / "report.txt", result.report.text());
    write_file(out / "report.json", result.report.json() + "\n");
    write_file(out / "matrix.json", matrix_to_json(cases) + "\n");
    nlohmann::json timing{{"started_at", result.started_at},
                          {"finished_at", result.finished_at},
                          {"wall_seconds", result.wall_seconds},
                          {"workers", options.workers},
                          {"batch_size", options.batch_size},
                          {"batches", plan.batches.size()},
                          {"cases", cases.size()},
                          {"mode", options.mode == WorkerMode::process ? "process" : "thread"}};
    nlohmann::json diag = nlohmann::json::object();
    for (const auto& [id, d] : result.diagnostics) diag[id] = d;
    timing["failures"] = diag;
    write_file(out / "timing.json", timing.dump() + "\n");
  }
  return result;
}

}  // namespace twinforge::orchestrator
