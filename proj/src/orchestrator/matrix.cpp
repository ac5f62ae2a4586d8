#include <algorithm>
#include <thread>

#include "json.hpp"
#include "twinforge/orchestrator.hpp"

namespace twinforge::orchestrator {

using nlohmann::json;

std::string make_case_id(autonomy::ModelId model, environment::Weather weather,
                         environment::TimeOfDay time) {
  std::string id(autonomy::to_string(model));
  id += '-';
  id += environment::to_string(weather);
  id += '-';
  id += environment::to_compact(time);
  return id;
}

TestCase make_case(autonomy::ModelId model, environment::Weather weather,
                   environment::TimeOfDay time, const std::string& scenario) {
  TestCase c;
  c.model = model;
  c.weather = weather;
  c.time = time;
  c.case_id = make_case_id(model, weather, time);
  c.seed = stable_hash(c.case_id);
  c.scenario = scenario;
  return c;
}

std::optional<TestCase> parse_case_id(std::string_view id, const std::string& scenario) {
  const auto a = id.find('-');
  if (a == std::string_view::npos) return std::nullopt;
  const auto b = id.find('-', a + 1);
  if (b == std::string_view::npos) return std::nullopt;
  const auto model = autonomy::parse_model(id.substr(0, a));
  const auto weather = environment::parse_weather(id.substr(a + 1, b - a - 1));
  const auto time = environment::parse_time(id.substr(b + 1));
  if (!model || !weather || !time) return std::nullopt;
  TestCase c = make_case(*model, *weather, *time, scenario);
  if (c.case_id != id) return std::nullopt;
  return c;
}

std::vector<TestCase> expand_matrix(std::span<const autonomy::ModelId> models,
                                    std::span<const environment::Weather> weathers,
                                    std::span<const environment::TimeOfDay> times,
                                    const std::string& scenario) {
  if (models.empty() || weathers.empty() || times.empty()) {
    throw ConfigError("matrix factors must be nonempty");
  }
  std::vector<TestCase> out;
  out.reserve(models.size() * weathers.size() * times.size());
  for (auto m : models) {
    for (auto t : times) {
      for (auto w : weathers) out.push_back(make_case(m, w, t, scenario));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (out[i].case_id == out[j].case_id) throw ConfigError("duplicate factor in matrix");
    }
  }
  return out;
}

std::vector<TestCase> default_matrix() {
  return expand_matrix(autonomy::kAllModels, environment::kAllWeathers, environment::kAllTimes);
}

BatchPlan schedule_batches(const std::vector<TestCase>& cases, std::size_t batch_size,
                           std::size_t worker_count) {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.worker_count = std::max<std::size_t>(worker_count, 1);
  for (std::size_t i = 0; i < cases.size(); i += batch_size) {
    const auto end = std::min(cases.size(), i + batch_size);
    plan.batches.emplace_back(cases.begin() + static_cast<long>(i),
                              cases.begin() + static_cast<long>(end));
  }
  return plan;
}

std::size_t default_batch_size() {
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  return std::min<std::size_t>(16, cores);
}

std::string matrix_to_json(const std::vector<TestCase>& cases) {
  json j;
  j["schema_version"] = 1;
  j["cases"] = json::array();
  for (const auto& c : cases) {
    j["cases"].push_back({{"case_id", c.case_id},
                          {"model", autonomy::to_string(c.model)},
                          {"weather", environment::to_string(c.weather)},
                          {"time", environment::to_string(c.time)},
                          {"seed", c.seed},
                          {"scenario", c.scenario}});
  }
  return j.dump(2);
}

std::vector<TestCase> matrix_from_json(const std::string& text) {
  std::vector<TestCase> out;
  try {
    const auto j = json::parse(text);
    if (j.value("schema_version", 0) != 1) throw ConfigError("unsupported matrix schema_version");
    for (const auto& c : j.at("cases")) {
      const auto model = autonomy::parse_model(c.at("model").get<std::string>());
      const auto weather = environment::parse_weather(c.at("weather").get<std::string>());
      const auto time = environment::parse_time(c.at("time").get<std::string>());
      if (!model || !weather || !time) throw ConfigError("unknown factor in matrix file");
      TestCase tc = make_case(*model, *weather, *time, c.value("scenario", "default"));
      if (c.contains("case_id") && c.at("case_id").get<std::string>() != tc.case_id) {
        throw ConfigError("case_id does not match its factors: " + c.at("case_id").get<std::string>());
      }
      tc.seed = c.value("seed", tc.seed);
      out.push_back(tc);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("matrix file: ") + e.what());
  }
  return out;
}

std::vector<metrics::ReportCase> report_cases(const BatchPlan& plan) {
  std::vector<metrics::ReportCase> out;
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    for (const auto& c : plan.batches[b]) {
      out.push_back({c.case_id, std::string(autonomy::to_string(c.model)),
                     std::string(environment::to_string(c.weather)),
                     std::string(environment::to_string(c.time)), static_cast<int>(b + 1)});
    }
  }
  return out;
}

}  // namespace twinforge::orchestrator
