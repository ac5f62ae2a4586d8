#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "twinforge/orchestrator.hpp"

#include "httplib.h"
#include "json.hpp"

using namespace twinforge;
using namespace twinforge::orchestrator;
using autonomy::ModelId;
using environment::TimeOfDay;
using environment::Weather;
using nlohmann::json;

namespace {

std::vector<TestCase> small_matrix() {
  const std::array<ModelId, 2> models{ModelId::v3, ModelId::v2_tiny};
  const std::array<Weather, 2> weathers{Weather::clear, Weather::thick_fog};
  const std::array<TimeOfDay, 2> times{TimeOfDay::t0000, TimeOfDay::t1200};
  return expand_matrix(models, weathers, times);
}

std::string done_body(const std::string& csv) {
  return json{{"schema_version", 1}, {"status", "done"}, {"csv_base64", base64_encode(csv)}}.dump();
}

std::string tiny_csv(int collisions) {
  metrics::TelemetryRecord r;
  r.t = 0.01;
  r.dtc = 3.0;
  r.collision_count = collisions;
  return metrics::csv_header() + "\n" + metrics::format_record(r) + "\n";
}

}  // namespace

TEST_CASE("case ids and seeds") {
  const auto c = make_case(ModelId::v3_tiny, Weather::thick_fog, TimeOfDay::t0000);
  CHECK(c.case_id == "v3_tiny-thick_fog-0000");
  CHECK(c.seed == stable_hash("v3_tiny-thick_fog-0000"));
  const auto parsed = parse_case_id("v3_tiny-thick_fog-0000");
  REQUIRE(parsed);
  CHECK(*parsed == c);
  CHECK_FALSE(parse_case_id("v3-sunny-1200"));
  CHECK_FALSE(parse_case_id("v3-clear"));
  CHECK_FALSE(parse_case_id("v9-clear-1200"));
}

TEST_CASE("default matrix covers every combination once") {
  const auto m = default_matrix();
  REQUIRE(m.size() == 128);
  std::set<std::string> ids;
  for (const auto& c : m) ids.insert(c.case_id);
  CHECK(ids.size() == 128);
  for (auto model : autonomy::kAllModels) {
    for (auto w : environment::kAllWeathers) {
      for (auto t : environment::kAllTimes) CHECK(ids.count(make_case_id(model, w, t)) == 1);
    }
  }
}

TEST_CASE("batches of 16 hold one model at two times of day") {
  const auto plan = schedule_batches(default_matrix(), 16);
  REQUIRE(plan.batches.size() == 8);
  for (const auto& b : plan.batches) {
    REQUIRE(b.size() == 16);
    std::set<ModelId> models;
    std::set<TimeOfDay> times;
    std::set<Weather> weathers;
    for (const auto& c : b) {
      models.insert(c.model);
      times.insert(c.time);
      weathers.insert(c.weather);
    }
    CHECK(models.size() == 1);
    CHECK(times.size() == 2);
    CHECK(weathers.size() == 8);
  }
  std::set<TimeOfDay> dark{TimeOfDay::t0000, TimeOfDay::t0600};
  for (const auto& c : plan.batches[2]) {
    CHECK(c.model == ModelId::v2_tiny);
    CHECK(dark.count(c.time) == 1);
  }
  for (const auto& c : plan.batches[6]) {
    CHECK(c.model == ModelId::v3_tiny);
    CHECK(dark.count(c.time) == 1);
  }
}

TEST_CASE("scheduling partitions without loss or duplication") {
  const auto cases = default_matrix();
  for (std::size_t bs : {1, 3, 7, 16, 32, 200}) {
    const auto plan = schedule_batches(cases, bs);
    std::vector<TestCase> flat;
    for (const auto& b : plan.batches) {
      CHECK(b.size() <= bs);
      CHECK_FALSE(b.empty());
      flat.insert(flat.end(), b.begin(), b.end());
    }
    CHECK(flat == cases);
  }
  CHECK_THROWS_AS(schedule_batches(cases, 0), ConfigError);
  CHECK(default_batch_size() >= 1);
  CHECK(default_batch_size() <= 16);
}

TEST_CASE("matrix JSON round-trip") {
  const auto m = small_matrix();
  CHECK(matrix_from_json(matrix_to_json(m)) == m);
  CHECK_THROWS_AS(matrix_from_json("{\"schema_version\":2,\"cases\":[]}"), ConfigError);
  CHECK_THROWS_AS(matrix_from_json("nope"), ConfigError);
  const std::array<ModelId, 2> dup{ModelId::v3, ModelId::v3};
  const std::array<Weather, 1> w{Weather::clear};
  const std::array<TimeOfDay, 1> t{TimeOfDay::t1200};
  CHECK_THROWS_AS(expand_matrix(dup, w, t), ConfigError);
}

TEST_CASE("episode is deterministic per case") {
  const EpisodeInputs inputs;
  const auto c = make_case(ModelId::v3, Weather::clear, TimeOfDay::t1200);
  const auto a = run_episode(c, inputs);
  const auto b = run_episode(c, inputs);
  CHECK(a.csv == b.csv);
  CHECK(a.verdict.passed);
  CHECK(a.verdict.aeb_triggered);
  CHECK(a.termination == Termination::aeb_stop);
  CHECK(a.verdict.stop_margin > 0.0);
  EpisodeOptions other;
  other.seed_override = 12345;
  CHECK(run_episode(c, inputs, other).csv != a.csv);
}

TEST_CASE("a blind detector ends in a collision") {
  EpisodeInputs inputs;
  for (auto& p : inputs.presets.presets) p.base_detect_rate = 0.0;
  const auto c = make_case(ModelId::v3, Weather::clear, TimeOfDay::t1200);
  const auto r = run_episode(c, inputs);
  CHECK_FALSE(r.verdict.passed);
  CHECK(r.verdict.collision_count >= 1);
  CHECK_FALSE(r.verdict.aeb_triggered);
  CHECK(r.verdict.min_dtc <= 0.0);
}

TEST_CASE("episode stepping and telemetry") {
  const EpisodeInputs inputs;
  Episode ep(make_case(ModelId::v2, Weather::cloudy, TimeOfDay::t1800), inputs);
  for (int i = 0; i < 100; ++i) REQUIRE(ep.step());
  CHECK(ep.steps() == 100);
  CHECK(ep.last_record().t == doctest::Approx(1.0));
  CHECK(ep.memory_bytes() > 0);
  const auto rows = metrics::parse_csv(ep.csv());
  CHECK(rows.size() == 100);
  CHECK(rows.back().speed > 0.0);
}

TEST_CASE("overrides") {
  auto c = make_case(ModelId::v3, Weather::clear, TimeOfDay::t1200);
  EpisodeInputs in;
  apply_overrides(R"({"cruise_speed": 8.0, "t_max": 30, "weather": "heavy_rain", "seed": 99})", c, in);
  CHECK(in.scenario.cruise_speed == 8.0);
  CHECK(in.scenario.t_max == 30.0);
  CHECK(c.weather == Weather::heavy_rain);
  CHECK(c.seed == 99);
  CHECK_THROWS_AS(apply_overrides(R"({"warp": 9})", c, in), ConfigError);
  CHECK_THROWS_AS(apply_overrides(R"({"weather": "sunny"})", c, in), ConfigError);
  CHECK_THROWS_AS(apply_overrides(R"({"cruise_speed": -1})", c, in), ConfigError);
  CHECK_THROWS_AS(apply_overrides("[", c, in), ConfigError);
  const auto r = run_episode(c, in);
  CHECK(r.verdict.duration <= 30.0 + 1e-9);
}

TEST_CASE("control plane protocol") {
  ControlPlane cp(small_matrix(), [] { return std::vector<WorkerInfo>{{"w1", "local"}}; });
  const int port = cp.start();
  httplib::Client cli("127.0.0.1", port);
  const std::string id = "v3-clear-1200";

  auto r = cli.Get("/config/" + id);
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["status"] == "pending");
  CHECK(cli.Get("/config/nope")->status == 404);

  // Metrics before a claim are refused.
  CHECK(cli.Post("/metrics/" + id, done_body(tiny_csv(0)), "application/json")->status == 409);

  // Overrides: validated, unknown keys refused.
  CHECK(cli.Post("/config", R"({"overrides":{"t_max":50}})", "application/json")->status == 200);
  CHECK(cli.Post("/config", R"({"overrides":{"bogus":1}})", "application/json")->status == 400);
  CHECK(cli.Post("/config", R"({"case_id":"nope","overrides":{}})", "application/json")->status == 404);
  CHECK(cli.Post("/config", "{not json", "application/json")->status == 400);

  httplib::Headers claim{{"X-Worker-Id", "w1"}};
  r = cli.Get("/config/" + id, claim);
  REQUIRE(r->status == 200);
  const auto cfg = json::parse(r->body);
  CHECK(cfg["status"] == "running");
  CHECK(cfg["overrides"]["t_max"] == 50);
  CHECK(cli.Get("/config/" + id, claim)->status == 409);
  CHECK(cli.Post("/config", json{{"case_id", id}, {"overrides", {{"t_max", 10}}}}.dump(),
                 "application/json")->status == 409);

  // Bad payloads leave the case running.
  CHECK(cli.Post("/metrics/" + id, R"({"status":"done","csv_base64":"@@@@"})", "application/json")->status == 400);
  CHECK(cli.Post("/metrics/" + id, R"({"status":"weird"})", "application/json")->status == 400);
  CHECK(cp.record(id)->status == CaseStatus::running);

  auto status = json::parse(cli.Get("/status/" + id)->body);
  CHECK(status["worker"] == "w1");
  CHECK(status["latest"].is_null());

  r = cli.Post("/metrics/" + id, done_body(tiny_csv(0)), "application/json");
  REQUIRE(r->status == 200);
  auto body = json::parse(r->body);
  CHECK(body["verdict"]["passed"] == true);
  CHECK_FALSE(body.contains("warning"));
  CHECK(cp.terminal_count() == 1);

  // A duplicate replaces the earlier summary and warns.
  r = cli.Post("/metrics/" + id, done_body(tiny_csv(2)), "application/json");
  body = json::parse(r->body);
  CHECK(body.contains("warning"));
  CHECK(cp.warning_count() == 1);
  CHECK(cp.verdicts().at(id).collision_count == 2);
  CHECK(cp.terminal_count() == 1);

  status = json::parse(cli.Get("/status/" + id)->body);
  CHECK(status["status"] == "done");
  CHECK(status["latest"]["collision_count"] == 2);

  const auto results = json::parse(cli.Get("/results")->body)["results"];
  REQUIRE(results.size() == 1);
  CHECK(results[0]["case_id"] == id);
  CHECK_FALSE(results[0].contains("csv_base64"));
  const auto with_csv = json::parse(cli.Get("/results?csv=1")->body)["results"];
  CHECK(base64_decode(with_csv[0]["csv_base64"].get<std::string>()) == tiny_csv(2));

  const auto workers = json::parse(cli.Post("/refresh", "", "application/json")->body)["workers"];
  REQUIRE(workers.size() == 1);
  CHECK(workers[0]["id"] == "w1");
  CHECK(cp.workers().size() == 1);

  // With no pending case left, invalid overrides are still refused.
  for (const auto& c : small_matrix()) cli.Get("/config/" + c.case_id, claim);
  CHECK(cli.Post("/config", R"({"overrides":{"cruise_speed":"fast"}})", "application/json")->status == 400);
  CHECK(cli.Post("/config", R"({"overrides":{"t_max":20}})", "application/json")->status == 200);
  CHECK_THROWS_AS(cp.set_overrides(R"({"bogus":1})"), ConfigError);

  cp.mark_failed("v2_tiny-clear-0000", "lost", true);
  CHECK(cp.record("v2_tiny-clear-0000")->infrastructure);
  CHECK(cp.terminal_count() == 2);
  cp.stop();
}

TEST_CASE("worker runs a case end to end") {
  ControlPlane cp(small_matrix());
  WorkerOptions opt;
  opt.port = cp.start();
  opt.worker_id = "t";
  const auto out = run_worker("v3-clear-1200", opt);
  CHECK(out.ok);
  REQUIRE(out.verdict);
  CHECK(out.verdict->passed);
  const auto server_side = cp.verdicts().at("v3-clear-1200");
  CHECK(server_side.min_dtc == out.verdict->min_dtc);
  const auto again = run_worker("v3-clear-1200", opt);
  CHECK_FALSE(again.ok);
}

TEST_CASE("unreachable control plane is an infrastructure failure") {
  int port = 0;
  {
    ControlPlane probe({});
    port = probe.start();
  }
  WorkerOptions opt;
  opt.port = port;
  opt.max_retries = 2;
  opt.retry_delay_ms = 10;
  opt.timeout_seconds = 1;
  const auto out = run_worker("v3-clear-1200", opt);
  CHECK_FALSE(out.ok);
  CHECK(out.infrastructure);
}

TEST_CASE("batch results do not depend on the worker count") {
  const EpisodeInputs inputs;
  const auto cases = small_matrix();
  std::optional<BatchResult> first;
  for (std::size_t workers : {1, 4, 16}) {
    BatchOptions opt;
    opt.workers = workers;
    opt.batch_size = 4;
    auto r = run_batch(cases, inputs, opt);
    CHECK(r.exit_code == 0);
    CHECK(r.csvs.size() == cases.size());
    CHECK(r.report.total == static_cast<int>(cases.size()));
    if (!first) {
      first = std::move(r);
      continue;
    }
    CHECK(r.csvs == first->csvs);
    CHECK(r.report.passed == first->report.passed);
  }
}

TEST_CASE("spearman correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 1, 2, 2}, {5, 5, 9, 9}) == doctest::Approx(1.0));
  CHECK(resident_bytes() > 0);
  CHECK(process_cpu_seconds() >= 0.0);
}
