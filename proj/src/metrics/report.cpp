#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"
#include "twinforge/metrics.hpp"

namespace twinforge::metrics {

namespace {

std::string join_unique(const std::vector<std::string>& items, const char* sep) {
  std::vector<std::string> seen;
  for (const auto& s : items) {
    if (std::find(seen.begin(), seen.end(), s) == seen.end()) seen.push_back(s);
  }
  std::string out;
  for (const auto& s : seen) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

Report aggregate_report(const std::vector<ReportCase>& matrix,
                        const std::map<std::string, Verdict>& verdicts, bool non_reproducible) {
  Report rep;
  rep.non_reproducible = non_reproducible;
  std::map<int, std::vector<const ReportCase*>> by_batch;
  std::vector<std::string> model_order;
  for (const auto& c : matrix) {
    by_batch[c.batch].push_back(&c);
    if (std::find(model_order.begin(), model_order.end(), c.model) == model_order.end()) {
      model_order.push_back(c.model);
    }
  }
  std::map<std::string, ModelRow> models;
  for (const auto& m : model_order) models[m].model = m;

  for (const auto& [batch, cases] : by_batch) {
    BatchRow row;
    row.batch = batch;
    std::vector<std::string> names, times;
    for (const auto* c : cases) {
      names.push_back(c->model);
      times.push_back(c->time);
      ++row.total;
      auto& mr = models[c->model];
      ++mr.total;
      const auto it = verdicts.find(c->case_id);
      if (it == verdicts.end()) {
        ++row.infrastructure;
        rep.infrastructure_failures.push_back(c->case_id);
        continue;
      }
      rep.verdicts[c->case_id] = it->second;
      if (it->second.passed) {
        ++row.passed;
        ++mr.passed;
      }
      if (it->second.aeb_triggered) {
        ++row.aeb_triggered;
        ++mr.aeb_triggered;
      }
    }
    row.unit = join_unique(names, "+") + " (" + join_unique(times, ", ") + ")";
    rep.passed += row.passed;
    rep.total += row.total;
    rep.batches.push_back(row);
  }
  for (const auto& m : model_order) rep.models.push_back(models[m]);
  return rep;
}

std::string Report::text() const {
  std::ostringstream os;
  if (non_reproducible) os << "# NOTE: seeds overridden; results are not reproducible\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-9s %-28s %-18s %-18s %s\n", "Batch ID", "Unit Under Test",
                "Test Cases Passed", "Total Test Cases", "AEB Triggered");
  os << buf;
  for (const auto& b : batches) {
    std::snprintf(buf, sizeof buf, "%-9d %-28s %-18d %-18d %d\n", b.batch, b.unit.c_str(),
                  b.passed, b.total, b.aeb_triggered);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-9s %-28s %-18d %-18d\n", "Cumulative", "N/A", passed, total);
  os << buf;
  os << "\nModel       Passed  Total  Success rate (%)\n";
  for (const auto& m : models) {
    std::snprintf(buf, sizeof buf, "%-11s %-7d %-6d %s\n", m.model.c_str(), m.passed, m.total,
                  format_rate(m.passed, m.total).c_str());
    os << buf;
  }
  os << "\nCumulative: " << passed << " / " << total << "\n";
  if (!infrastructure_failures.empty()) {
    os << "Infrastructure failures (" << infrastructure_failures.size() << "):";
    for (const auto& id : infrastructure_failures) os << ' ' << id;
    os << "\n";
  }
  return os.str();
}

std::string Report::json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["non_reproducible"] = non_reproducible;
  j["passed"] = passed;
  j["total"] = total;
  j["cumulative"] = std::to_string(passed) + " / " + std::to_string(total);
  j["batches"] = nlohmann::json::array();
  for (const auto& b : batches) {
    j["batches"].push_back({{"batch", b.batch},
                            {"unit", b.unit},
                            {"passed", b.passed},
                            {"total", b.total},
                            {"aeb_triggered", b.aeb_triggered},
                            {"infrastructure", b.infrastructure}});
  }
  j["models"] = nlohmann::json::array();
  for (const auto& m : models) {
    j["models"].push_back({{"model", m.model},
                           {"passed", m.passed},
                           {"total", m.total},
                           {"aeb_triggered", m.aeb_triggered},
                           {"success_rate", format_rate(m.passed, m.total)}});
  }
  j["infrastructure_failures"] = infrastructure_failures;
  j["verdicts"] = nlohmann::json::array();
  for (const auto& [id, v] : verdicts) j["verdicts"].push_back(nlohmann::json::parse(verdict_to_json(v)));
  return j.dump(2);
}

std::string export_channel(std::string_view channel,
                           const std::map<std::string, std::vector<TelemetryRecord>>& series,
                           std::size_t stride) {
  const auto& cols = telemetry_columns();
  const auto it = std::find(cols.begin(), cols.end(), channel);
  if (it == cols.end()) throw TelemetryError("unknown channel '" + std::string(channel) + "'");
  const auto index = static_cast<std::size_t>(it - cols.begin());
  if (stride == 0) stride = 1;
  std::string out = "case_id,t," + std::string(channel) + "\n";
  for (const auto& [id, records] : series) {
    for (std::size_t i = 0; i < records.size(); i += stride) {
      const std::string line = format_record(records[i]);
      std::size_t start = 0;
      for (std::size_t k = 0; k < index; ++k) start = line.find(',', start) + 1;
      const std::size_t end = line.find(',', start);
      const std::string t = line.substr(0, line.find(','));
      out += id + "," + t + "," + line.substr(start, end == std::string::npos ? end : end - start) +
             "\n";
    }
  }
  return out;
}

}  // namespace twinforge::metrics
