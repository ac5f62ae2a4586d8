#include <chrono>
#include <thread>

#include "twinforge/orchestrator.hpp"

#include "httplib.h"
#include "json.hpp"

namespace twinforge::orchestrator {

using nlohmann::json;

namespace {

template <typename Call>
httplib::Result with_retries(const WorkerOptions& o, Call&& call) {
  httplib::Result res = call();
  for (int attempt = 1; !res && attempt <= o.max_retries; ++attempt) {
    std::this_thread::sleep_for(std::chrono::milliseconds(o.retry_delay_ms * attempt));
    res = call();
  }
  return res;
}

}  // namespace

WorkerOutcome run_worker(const std::string& case_id, const WorkerOptions& options) {
  WorkerOutcome out;
  httplib::Client client(options.host, options.port);
  client.set_connection_timeout(options.timeout_seconds, 0);
  client.set_read_timeout(options.timeout_seconds, 0);
  client.set_write_timeout(options.timeout_seconds, 0);
  const httplib::Headers headers{{"X-Worker-Id", options.worker_id}};

  auto fetched = with_retries(options, [&] { return client.Get("/config/" + case_id, headers); });
  if (!fetched) {
    out.infrastructure = true;
    out.diagnostic = "control plane unreachable: " + httplib::to_string(fetched.error());
    return out;
  }
  if (fetched->status != 200) {
    out.infrastructure = true;
    out.diagnostic = "config request rejected (" + std::to_string(fetched->status) + "): " +
                     fetched->body;
    return out;
  }

  json body;
  std::string csv;
  try {
    const json cfg = json::parse(fetched->body);
    TestCase tc;
    tc.case_id = cfg.at("case_id").get<std::string>();
    const auto model = autonomy::parse_model(cfg.at("model").get<std::string>());
    const auto weather = environment::parse_weather(cfg.at("weather").get<std::string>());
    const auto time = environment::parse_time(cfg.at("time").get<std::string>());
    if (!model || !weather || !time) throw ConfigError("config names an unknown condition");
    tc.model = *model;
    tc.weather = *weather;
    tc.time = *time;
    tc.seed = cfg.at("seed").get<std::uint64_t>();
    tc.scenario = cfg.value("scenario", std::string("default"));
    EpisodeInputs inputs = options.inputs;
    apply_overrides(cfg.value("overrides", json::object()).dump(), tc, inputs);

    const auto result = run_episode(tc, inputs);
    csv = result.csv;
    out.verdict = result.verdict;
    body = {{"schema_version", 1},
            {"status", "done"},
            {"verdict", json::parse(metrics::verdict_to_json(result.verdict))},
            {"csv_base64", base64_encode(csv)},
            {"diagnostic", ""}};
  } catch (const std::exception& e) {
    out.diagnostic = e.what();
    out.verdict.reset();
    body = {{"schema_version", 1}, {"status", "failed"}, {"diagnostic", out.diagnostic}};
  }

  const std::string payload = body.dump();
  auto posted = with_retries(options, [&] {
    return client.Post("/metrics/" + case_id, headers, payload, "application/json");
  });
  if (!posted || posted->status != 200) {
    out.infrastructure = true;
    out.ok = false;
    out.diagnostic = posted ? "metrics rejected (" + std::to_string(posted->status) +
                                  "): " + posted->body
                            : "metrics post failed: " + httplib::to_string(posted.error());
    return out;
  }
  out.ok = body["status"] == "done";
  return out;
}

}  // namespace twinforge::orchestrator
