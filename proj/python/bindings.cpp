#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "twinforge/orchestrator.hpp"

namespace py = pybind11;
using namespace twinforge;

namespace {

py::dict verdict_dict(const metrics::Verdict& v) {
  py::dict d;
  d["case_id"] = v.case_id;
  d["passed"] = v.passed;
  d["collision_count"] = v.collision_count;
  d["min_dtc"] = v.min_dtc;
  d["aeb_triggered"] = v.aeb_triggered;
  d["stop_margin"] = v.stop_margin;
  d["duration"] = v.duration;
  return d;
}

orchestrator::TestCase case_or_throw(const std::string& id) {
  auto tc = orchestrator::parse_case_id(id);
  if (!tc) throw py::value_error("invalid case id '" + id + "'");
  return *tc;
}

}  // namespace

PYBIND11_MODULE(_twinforge, m) {
  m.doc() = "Scenario sweep harness: vehicle dynamics, sensors, surrogate perception and AEB";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SimulationFault>(m, "SimulationFault", PyExc_RuntimeError);
  py::register_exception<QueryError>(m, "QueryError", PyExc_ValueError);
  py::register_exception<metrics::TelemetryError>(m, "TelemetryError", PyExc_ValueError);

  m.def("stable_hash", [](const std::string& s) { return stable_hash(s); });

  m.def("default_matrix", [] {
    std::vector<std::string> ids;
    for (const auto& c : orchestrator::default_matrix()) ids.push_back(c.case_id);
    return ids;
  });

  m.def("batches", [](std::size_t batch_size) {
    std::vector<std::vector<std::string>> out;
    for (const auto& b : orchestrator::schedule_batches(orchestrator::default_matrix(), batch_size).batches) {
      auto& ids = out.emplace_back();
      for (const auto& c : b) ids.push_back(c.case_id);
    }
    return out;
  }, py::arg("batch_size") = 16);

  m.def("parse_case_id", [](const std::string& id) -> std::optional<py::dict> {
    const auto tc = orchestrator::parse_case_id(id);
    if (!tc) return std::nullopt;
    py::dict d;
    d["case_id"] = tc->case_id;
    d["model"] = std::string(autonomy::to_string(tc->model));
    d["weather"] = std::string(environment::to_string(tc->weather));
    d["time"] = std::string(environment::to_string(tc->time));
    d["seed"] = tc->seed;
    return d;
  });

  m.def("condition", [](const std::string& weather, const std::string& time) {
    const auto w = environment::parse_weather(weather);
    const auto t = environment::parse_time(time);
    if (!w || !t) throw py::value_error("unknown weather or time of day");
    const auto c = environment::condition_derive(*w, *t);
    py::dict d;
    d["visibility"] = c.visibility;
    d["ambient_light"] = c.ambient_light;
    d["fog_density"] = c.fog_density;
    d["traction"] = c.traction;
    return d;
  });

  m.def("run_case", [](const std::string& id, std::optional<std::uint64_t> seed_override,
                       const std::string& overrides) {
    auto tc = case_or_throw(id);
    orchestrator::EpisodeInputs inputs;
    if (!overrides.empty()) orchestrator::apply_overrides(overrides, tc, inputs);
    orchestrator::EpisodeOptions opts;
    opts.seed_override = seed_override;
    orchestrator::EpisodeResult r;
    {
      py::gil_scoped_release release;
      r = orchestrator::run_episode(tc, inputs, opts);
    }
    py::dict d;
    d["verdict"] = verdict_dict(r.verdict);
    d["csv"] = r.csv;
    d["termination"] = std::string(orchestrator::to_string(r.termination));
    d["steps"] = r.steps;
    return d;
  }, py::arg("case_id"), py::arg("seed_override") = std::nullopt, py::arg("overrides") = "");

  m.def("evaluate_csv", [](const std::string& id, const std::string& csv) {
    return verdict_dict(metrics::evaluate_verdict_csv(id, csv));
  });

  m.def("format_rate", &metrics::format_rate);

  m.def("suspension_coefficients", [](double mass, double omega, double zeta) {
    const auto c = dynamics::suspension_coefficients(mass, omega, zeta);
    return std::make_pair(c.stiffness, c.damping);
  });
  m.def("ackermann_angles", &dynamics::ackermann_angles);
  m.def("transmission_map_rpm", &dynamics::transmission_map_rpm);

  m.def("lidar_flat_ground", [](double height, double phi_deg) {
    environment::Scene scene;
    scene.terrain = environment::TerrainHeightmap::flat(0.0, 200.0, 200.0, 1.0, Vec2(-100, -100));
    sensors::LidarConfig c;
    c.mode = sensors::LidarMode::spatial;
    c.r_max = 150.0;
    c.theta_min = c.theta_max = 0.0;
    c.phi_min = c.phi_max = phi_deg * kPi / 180.0;
    const auto pc = sensors::lidar_scan_3d(c, make_pose(Vec3(0, 0, height), 0, 0, 0), scene);
    return pc.points.front().norm();
  });
}
