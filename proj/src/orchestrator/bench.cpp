#include <malloc.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "twinforge/orchestrator.hpp"

namespace twinforge::orchestrator {

namespace {

using Clock = std::chrono::steady_clock;

struct Instance {
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> steps{0};
  std::thread thread;
};

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::size_t resident_bytes() {
  std::ifstream f("/proc/self/statm");
  std::size_t size = 0, resident = 0;
  f >> size >> resident;
  return resident * static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
}

double process_cpu_seconds() {
  std::ifstream f("/proc/self/stat");
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto close = content.rfind(')');
  if (close == std::string::npos) return 0.0;
  std::istringstream rest(content.substr(close + 2));
  std::string field;
  // Fields after the command name start at "state" (field 3); utime and stime are 14 and 15.
  unsigned long long utime = 0, stime = 0;
  for (int i = 3; i <= 15 && rest >> field; ++i) {
    if (i == 14) utime = std::stoull(field);
    if (i == 15) stime = std::stoull(field);
  }
  return static_cast<double>(utime + stime) / static_cast<double>(sysconf(_SC_CLK_TCK));
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::string BenchResult::csv() const {
  std::string out = "t,instances,cpu_percent,rss_mb,steps_per_second\n";
  char line[160];
  for (const auto& s : samples) {
    std::snprintf(line, sizeof line, "%.3f,%d,%.2f,%.3f,%.1f\n", s.t, s.instances, s.cpu_percent,
                  s.rss_mb, s.steps_per_second);
    out += line;
  }
  return out;
}

double BenchResult::single_instance_step_rate() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : samples) {
    if (s.instances == 1) {
      sum += s.steps_per_second;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

BenchResult ramp_bench(const EpisodeInputs& inputs, const BenchOptions& options) {
  if (options.start_instances < 1) throw ConfigError("ramp needs at least one instance");
  if (!(options.drop_interval > 0.0) || !(options.sample_period > 0.0)) {
    throw ConfigError("ramp intervals must be positive");
  }
  // A fixed threshold keeps per-instance terrain buffers in their own mappings so that a
  // killed instance returns its memory to the OS.
  mallopt(M_MMAP_THRESHOLD, 128 * 1024);

  const int n = options.start_instances;
  std::vector<std::unique_ptr<Instance>> instances;
  for (int i = 0; i < n; ++i) {
    auto inst = std::make_unique<Instance>();
    Instance* raw = inst.get();
    inst->thread = std::thread([raw, &inputs, &options] {
      EpisodeOptions eo;
      eo.keep_csv = false;
      while (!raw->stop.load(std::memory_order_relaxed)) {
        Episode ep(options.test_case, inputs, eo);
        while (!raw->stop.load(std::memory_order_relaxed) && ep.step()) {
          raw->steps.fetch_add(1, std::memory_order_relaxed);
        }
      }
    });
    instances.push_back(std::move(inst));
  }

  BenchResult result;
  const auto start = Clock::now();
  auto last_time = start;
  double last_cpu = process_cpu_seconds();
  auto total_steps = [&] {
    std::uint64_t s = 0;
    for (const auto& i : instances) s += i->steps.load(std::memory_order_relaxed);
    return s;
  };
  std::uint64_t retired_steps = 0;
  std::uint64_t last_steps = 0;
  const double total = options.drop_interval * n;
  int next_sample = 1;
  for (;;) {
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (elapsed >= total - 1e-9) break;
    const double next_sample_t = next_sample * options.sample_period;
    const int alive = static_cast<int>(instances.size());
    const double next_drop_t = (n - alive + 1) * options.drop_interval;
    const double wake = std::min(next_sample_t, next_drop_t);
    std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                              std::chrono::duration<double>(wake)));

    if (wake == next_sample_t) {
      const auto now = Clock::now();
      const double dt = std::chrono::duration<double>(now - last_time).count();
      const double cpu = process_cpu_seconds();
      const std::uint64_t steps = retired_steps + total_steps();
      BenchSample s;
      s.t = std::chrono::duration<double>(now - start).count();
      s.instances = alive;
      s.cpu_percent = dt > 0 ? 100.0 * (cpu - last_cpu) / dt : 0.0;
      s.rss_mb = static_cast<double>(resident_bytes()) / (1024.0 * 1024.0);
      s.steps_per_second = dt > 0 ? static_cast<double>(steps - last_steps) / dt : 0.0;
      result.samples.push_back(s);
      last_time = now;
      last_cpu = cpu;
      last_steps = steps;
      ++next_sample;
    }
    if (wake == next_drop_t && alive > 1) {
      auto& victim = instances.back();
      victim->stop = true;
      victim->thread.join();
      retired_steps += victim->steps.load();
      instances.pop_back();
      malloc_trim(0);
    }
  }
  for (auto& i : instances) i->stop = true;
  for (auto& i : instances) i->thread.join();
  result.duration = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace twinforge::orchestrator
