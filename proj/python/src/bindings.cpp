#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "usocost/error.hpp"
#include "usocost/exchange.hpp"
#include "usocost/loop_cost.hpp"
#include "usocost/nusc.hpp"
#include "usocost/sdca.hpp"
#include "usocost/trading.hpp"

namespace py = pybind11;
using namespace usocost;

namespace {

// Structured results cross the boundary as JSON text; the Python wrapper
// decodes them into dicts.
template <class T>
std::string dump(const T& value) {
  return nlohmann::json(value).dump();
}

std::vector<ExchangeRecord> records_from_json(const std::string& text) {
  return nlohmann::json::parse(text).get<std::vector<ExchangeRecord>>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the usocost package";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<LedgerError>(m, "LedgerError", PyExc_RuntimeError);

  py::class_<LoopCostModel>(m, "LoopCostModel")
      .def(py::init<>())
      .def_static("published", &LoopCostModel::published)
      .def_readwrite("intercept", &LoopCostModel::intercept)
      .def_readwrite("slope", &LoopCostModel::slope)
      .def_readwrite("r_squared", &LoopCostModel::r_squared)
      .def_readwrite("t_intercept", &LoopCostModel::t_intercept)
      .def_readwrite("t_slope", &LoopCostModel::t_slope)
      .def_readwrite("n", &LoopCostModel::n)
      .def_readwrite("density_cap", &LoopCostModel::density_cap)
      .def("predict", [](const LoopCostModel& self, double d) { return predict_cost(self, d); }, py::arg("density"))
      .def("to_json", [](const LoopCostModel& self) { return dump(self); })
      .def("__repr__", [](const LoopCostModel& self) {
        std::ostringstream s;
        s << "LoopCostModel(intercept=" << self.intercept << ", slope=" << self.slope
          << ", r_squared=" << self.r_squared << ")";
        return s.str();
      });

  py::class_<DensitySizeModel>(m, "DensitySizeModel")
      .def(py::init<>())
      .def_readwrite("slope", &DensitySizeModel::slope)
      .def_readwrite("intercept", &DensitySizeModel::intercept)
      .def("density", [](const DensitySizeModel& self, double size) { return density_from_size(self, size); },
           py::arg("size"));

  m.def("fixture_dir", &fixture_dir);
  m.def(
      "load_exchange_csv",
      [](const std::string& path) { return dump(load_exchange_csv(resolve_input(path))); }, py::arg("path"));
  m.def(
      "fit_loglog",
      [](const std::vector<std::pair<double, double>>& points, double cap) {
        std::vector<CostPoint> pts;
        for (const auto& [d, c] : points) pts.push_back({d, c});
        return fit_loglog(pts, cap);
      },
      py::arg("points"), py::arg("density_cap") = 50.0);
  m.def(
      "fit_records",
      [](const std::string& records, double cap) {
        const auto rs = records_from_json(records);
        return fit_loglog(cost_points(rs), cap);
      },
      py::arg("records_json"), py::arg("density_cap") = 50.0);
  m.def("predict_cost", &predict_cost, py::arg("model"), py::arg("density"));
  m.def("ckm_per_line", &ckm_per_line, py::arg("avg_subscriber_distance"));
  m.def(
      "density_band", [](double d) { return std::string(to_string(classify_density_band(d))); }, py::arg("density"));
  m.def(
      "summarize_records", [](const std::string& records) { return dump(summarize_records(records_from_json(records))); },
      py::arg("records_json"));
  m.def(
      "validate_records",
      [](const std::string& records, double density_tol, double teledensity_tol, double identity_tol) {
        return dump(validate_records(records_from_json(records),
                                     ValidationConfig{density_tol, teledensity_tol, identity_tol}));
      },
      py::arg("records_json"), py::arg("density_tolerance") = 0.02, py::arg("teledensity_tolerance") = 0.05,
      py::arg("identity_tolerance") = 0.10);
  m.def(
      "estimate_sdca_cost",
      [](const std::string& profile, const DensitySizeModel& dsm, const LoopCostModel& lcm) {
        return dump(estimate_sdca_cost(nlohmann::json::parse(profile).get<SdcaProfile>(), dsm, lcm));
      },
      py::arg("profile_json"), py::arg("size_model") = DensitySizeModel{},
      py::arg("loop_model") = LoopCostModel::published());

  m.def("capital_recovery_factor", &capital_recovery_factor, py::arg("rate"), py::arg("lifetime"));
  m.def(
      "nusc_grid",
      [](const std::string& scenario, std::optional<std::vector<double>> capex) {
        const auto s = nlohmann::json::parse(scenario).get<NuscScenario>();
        return dump(capex ? scenario_grid(s, *capex) : scenario_grid(s));
      },
      py::arg("scenario_json"), py::arg("capex") = py::none());

  m.def(
      "run_simulation",
      [](const std::string& config) {
        return dump(trading::run_simulation(nlohmann::json::parse(config).get<trading::SimulationConfig>()));
      },
      py::arg("config_json"));
}
