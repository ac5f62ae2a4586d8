#include <cmath>
#include <sstream>

#include "twinforge/orchestrator.hpp"

#include "httplib.h"
#include "json.hpp"

namespace twinforge::orchestrator {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

json case_json(const CaseRecord& r) {
  const auto& c = r.test_case;
  return json{{"schema_version", kSchemaVersion},
              {"case_id", c.case_id},
              {"model", std::string(autonomy::to_string(c.model))},
              {"weather", std::string(environment::to_string(c.weather))},
              {"time", std::string(environment::to_string(c.time))},
              {"seed", c.seed},
              {"scenario", c.scenario},
              {"overrides", json::parse(r.overrides)},
              {"status", std::string(to_string(r.status))}};
}

json latest_row(const std::string& csv) {
  if (csv.empty()) return nullptr;
  const auto header_end = csv.find('\n');
  std::size_t end = csv.size();
  while (end > 0 && csv[end - 1] == '\n') --end;
  const auto start = csv.rfind('\n', end - 1);
  if (header_end == std::string::npos || start == std::string::npos || start < header_end) {
    return nullptr;
  }
  std::stringstream names(csv.substr(0, header_end));
  std::stringstream values(csv.substr(start + 1, end - start - 1));
  json row = json::object();
  std::string name, value;
  while (std::getline(names, name, ',') && std::getline(values, value, ',')) {
    char* tail = nullptr;
    const double v = std::strtod(value.c_str(), &tail);
    if (tail && *tail == '\0' && std::isfinite(v)) {
      row[name] = v;
    } else {
      row[name] = value;
    }
  }
  return row;
}

}  // namespace

std::string_view to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::pending: return "pending";
    case CaseStatus::running: return "running";
    case CaseStatus::done: return "done";
    case CaseStatus::failed: return "failed";
  }
  return "pending";
}

ControlPlane::ControlPlane(std::vector<TestCase> cases, WorkerEnumerator enumerator)
    : enumerator_(std::move(enumerator)) {
  for (auto& c : cases) {
    if (cases_.count(c.case_id)) throw ConfigError("duplicate case id " + c.case_id);
    order_.push_back(c.case_id);
    CaseRecord r;
    r.test_case = std::move(c);
    cases_.emplace(r.test_case.case_id, std::move(r));
  }
}

ControlPlane::~ControlPlane() { stop(); }

void ControlPlane::set_worker_enumerator(WorkerEnumerator e) {
  std::lock_guard lock(mu_);
  enumerator_ = std::move(e);
}

void ControlPlane::set_overrides(const std::string& overrides_json) {
  json patch;
  try {
    patch = json::parse(overrides_json);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("overrides are not valid JSON: ") + e.what());
  }
  {
    TestCase probe_case;
    EpisodeInputs probe_inputs;
    apply_overrides(patch.dump(), probe_case, probe_inputs);
  }
  std::lock_guard lock(mu_);
  for (auto& [id, r] : cases_) {
    if (r.status != CaseStatus::pending) continue;
    json m = json::parse(r.overrides);
    m.update(patch);
    TestCase tc = r.test_case;
    EpisodeInputs probe;
    apply_overrides(m.dump(), tc, probe);
    r.overrides = m.dump();
  }
}

int ControlPlane::start(const std::string& host, int port) {
  if (server_) return port_;
  server_ = std::make_unique<httplib::Server>();
  server_->new_task_queue = [] { return new httplib::ThreadPool(16); };
  server_->set_payload_max_length(512ull << 20);
  install_routes();
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) {
    server_.reset();
    throw std::runtime_error("control plane could not bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ControlPlane::stop() {
  if (!server_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

void ControlPlane::mark_failed(const std::string& case_id, const std::string& diagnostic,
                               bool infrastructure) {
  std::lock_guard lock(mu_);
  auto it = cases_.find(case_id);
  if (it == cases_.end()) return;
  auto& r = it->second;
  if (r.status == CaseStatus::done || r.status == CaseStatus::failed) return;
  r.status = CaseStatus::failed;
  r.diagnostic = diagnostic;
  r.infrastructure = infrastructure;
}

std::optional<CaseRecord> ControlPlane::record(const std::string& case_id) const {
  std::lock_guard lock(mu_);
  auto it = cases_.find(case_id);
  if (it == cases_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, metrics::Verdict> ControlPlane::verdicts() const {
  std::lock_guard lock(mu_);
  std::map<std::string, metrics::Verdict> out;
  for (const auto& [id, r] : cases_) {
    if (r.status == CaseStatus::done && r.verdict) out.emplace(id, *r.verdict);
  }
  return out;
}

std::map<std::string, std::string> ControlPlane::csvs() const {
  std::lock_guard lock(mu_);
  std::map<std::string, std::string> out;
  for (const auto& [id, r] : cases_) {
    if (r.status == CaseStatus::done) out.emplace(id, r.csv);
  }
  return out;
}

std::size_t ControlPlane::terminal_count() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, r] : cases_) {
    n += r.status == CaseStatus::done || r.status == CaseStatus::failed;
  }
  return n;
}

std::size_t ControlPlane::warning_count() const {
  std::lock_guard lock(mu_);
  return warnings_;
}

std::vector<WorkerInfo> ControlPlane::workers() const {
  std::lock_guard lock(mu_);
  return workers_;
}

void ControlPlane::install_routes() {
  auto& s = *server_;

  s.Get(R"(/config/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    std::lock_guard lock(mu_);
    auto it = cases_.find(id);
    if (it == cases_.end()) return error(res, 404, "unknown case " + id);
    auto& r = it->second;
    if (req.has_header("X-Worker-Id")) {
      if (r.status != CaseStatus::pending) {
        return error(res, 409, "case " + id + " is " + std::string(to_string(r.status)));
      }
      r.status = CaseStatus::running;
      r.worker = req.get_header_value("X-Worker-Id");
    }
    reply(res, 200, case_json(r));
  });

  s.Post("/config", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return error(res, 400, "malformed JSON");
    }
    if (!body.is_object() || !body.contains("overrides") || !body["overrides"].is_object()) {
      return error(res, 400, "body must be an object with an 'overrides' object");
    }
    for (const auto& [key, value] : body.items()) {
      if (key != "overrides" && key != "case_id" && key != "schema_version") {
        return error(res, 400, "unknown field '" + key + "'");
      }
    }
    try {
      TestCase probe_case;
      EpisodeInputs probe_inputs;
      apply_overrides(body["overrides"].dump(), probe_case, probe_inputs);
    } catch (const ConfigError& e) {
      return error(res, 400, e.what());
    }
    std::lock_guard lock(mu_);
    std::vector<CaseRecord*> targets;
    if (body.contains("case_id")) {
      if (!body["case_id"].is_string()) return error(res, 400, "case_id must be a string");
      auto it = cases_.find(body["case_id"].get<std::string>());
      if (it == cases_.end()) return error(res, 404, "unknown case");
      if (it->second.status != CaseStatus::pending) {
        return error(res, 409, "case already started");
      }
      targets.push_back(&it->second);
    } else {
      for (auto& [id, r] : cases_) {
        if (r.status == CaseStatus::pending) targets.push_back(&r);
      }
    }
    std::vector<std::string> merged;
    for (auto* r : targets) {
      json m = json::parse(r->overrides);
      m.update(body["overrides"]);
      TestCase tc = r->test_case;
      EpisodeInputs probe;
      try {
        apply_overrides(m.dump(), tc, probe);
      } catch (const ConfigError& e) {
        return error(res, 400, e.what());
      }
      merged.push_back(m.dump());
    }
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i]->overrides = merged[i];
    reply(res, 200, json{{"updated", targets.size()}});
  });

  s.Post(R"(/metrics/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      return error(res, 400, "malformed JSON");
    }
    if (!body.is_object() || !body.contains("status") || !body["status"].is_string()) {
      return error(res, 400, "missing status");
    }
    if (body.value("schema_version", kSchemaVersion) != kSchemaVersion) {
      return error(res, 400, "unsupported schema_version");
    }
    const std::string status = body["status"];
    if (status != "done" && status != "failed") return error(res, 400, "bad status " + status);

    std::string csv;
    std::optional<metrics::Verdict> verdict;
    if (status == "done") {
      if (!body.contains("csv_base64") || !body["csv_base64"].is_string()) {
        return error(res, 400, "missing csv_base64");
      }
      try {
        csv = base64_decode(body["csv_base64"].get<std::string>());
        verdict = metrics::evaluate_verdict_csv(id, csv);
      } catch (const std::exception& e) {
        return error(res, 400, std::string("rejected telemetry: ") + e.what());
      }
    }

    std::lock_guard lock(mu_);
    auto it = cases_.find(id);
    if (it == cases_.end()) return error(res, 404, "unknown case " + id);
    auto& r = it->second;
    if (r.status == CaseStatus::pending) return error(res, 409, "case was never claimed");
    bool duplicate = false;
    if (r.status == CaseStatus::done || r.status == CaseStatus::failed) {
      ++warnings_;
      duplicate = true;
    }
    r.summaries += 1;
    if (status == "done") {
      r.status = CaseStatus::done;
      r.csv = std::move(csv);
      r.verdict = verdict;
      r.diagnostic.clear();
      r.infrastructure = false;
    } else {
      r.status = CaseStatus::failed;
      r.csv.clear();
      r.verdict.reset();
      r.diagnostic = body.value("diagnostic", std::string("worker reported failure"));
      r.infrastructure = body.value("infrastructure", false);
    }
    json out{{"accepted", true}, {"case_id", id}};
    if (duplicate) out["warning"] = "duplicate summary replaced the previous one";
    if (verdict) out["verdict"] = json::parse(metrics::verdict_to_json(*verdict));
    reply(res, 200, out);
  });

  s.Post("/refresh", [this](const httplib::Request&, httplib::Response& res) {
    WorkerEnumerator e;
    {
      std::lock_guard lock(mu_);
      e = enumerator_;
    }
    std::vector<WorkerInfo> found = e ? e() : std::vector<WorkerInfo>{};
    json list = json::array();
    for (const auto& w : found) list.push_back({{"id", w.id}, {"address", w.address}});
    {
      std::lock_guard lock(mu_);
      workers_ = std::move(found);
    }
    reply(res, 200, json{{"workers", list}});
  });

  s.Get("/results", [this](const httplib::Request& req, httplib::Response& res) {
    const bool with_csv = req.has_param("csv") && req.get_param_value("csv") == "1";
    std::lock_guard lock(mu_);
    json list = json::array();
    for (const auto& id : order_) {
      const auto& r = cases_.at(id);
      if (r.status != CaseStatus::done && r.status != CaseStatus::failed) continue;
      json item{{"case_id", id},
                {"status", std::string(to_string(r.status))},
                {"verdict", r.verdict ? json::parse(metrics::verdict_to_json(*r.verdict)) : json()},
                {"diagnostic", r.diagnostic},
                {"infrastructure", r.infrastructure}};
      if (with_csv) item["csv_base64"] = base64_encode(r.csv);
      list.push_back(std::move(item));
    }
    reply(res, 200, json{{"schema_version", kSchemaVersion}, {"results", list}});
  });

  s.Get(R"(/status/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    std::lock_guard lock(mu_);
    auto it = cases_.find(id);
    if (it == cases_.end()) return error(res, 404, "unknown case " + id);
    const auto& r = it->second;
    reply(res, 200,
          json{{"case_id", id},
               {"status", std::string(to_string(r.status))},
               {"worker", r.worker},
               {"latest", latest_row(r.csv)}});
  });
}

}  // namespace twinforge::orchestrator
