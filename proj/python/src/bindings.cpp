#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "ecmpc/armav.hpp"
#include "ecmpc/error_model.hpp"
#include "ecmpc/errors.hpp"
#include "ecmpc/qp_solver.hpp"
#include "ecmpc/scenario.hpp"

namespace py = pybind11;
using namespace ecmpc;

namespace {

Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

// Columns follow telemetry_header(); status is the QpStatus index.
Eigen::MatrixXd telemetry_array(const Telemetry& tel) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tel.size()), 45);
  for (std::size_t i = 0; i < tel.size(); ++i) {
    const TelemetryRow& r = tel[i];
    auto row = out.row(static_cast<Eigen::Index>(i));
    row(0) = r.time;
    row.segment<13>(1) = r.state.transpose();
    row.segment<13>(14) = r.reference.transpose();
    row.segment<4>(27) = r.compensation.transpose();
    row.segment<12>(31) = r.grfs.transpose();
    row(43) = static_cast<double>(r.status);
    row(44) = r.iterations;
  }
  return out;
}

std::vector<std::string> split_header() {
  std::vector<std::string> names;
  std::stringstream in(telemetry_header());
  std::string item;
  while (std::getline(in, item, ',')) names.push_back(item);
  return names;
}

py::dict metrics_dict(const RunMetrics& m) {
  py::dict d;
  d["mean_height"] = m.mean_height;
  d["height_p2p"] = m.height_p2p;
  d["mae"] = Eigen::VectorXd(m.mae);
  d["mse"] = Eigen::VectorXd(m.mse);
  d["fell_over"] = m.fell_over;
  d["n_samples"] = m.n_samples;
  return d;
}

py::dict result_dict(const ScenarioResult& r) {
  py::dict d;
  d["metrics"] = metrics_dict(r.metrics);
  d["telemetry"] = telemetry_array(r.telemetry);
  d["columns"] = split_header();
  d["diverged"] = r.diverged;
  d["solver_failure"] = r.solver_failure;
  d["compensated_ticks"] = r.compensated_ticks;
  d["refits"] = r.refits;
  d["failed_refits"] = r.failed_refits;
  if (r.final_model) d["model_json"] = armav_to_json(r.final_model->core());
  return d;
}

ArmavModel make_model(const std::vector<Eigen::MatrixXd>& phi, const std::vector<Eigen::MatrixXd>& theta,
                      const std::optional<Eigen::VectorXd>& mean) {
  return ArmavModel(phi, theta, mean.value_or(Eigen::VectorXd()));
}

}  // namespace

PYBIND11_MODULE(_ecmpc, m) {
  m.doc() = "Error-compensated MPC core";

  static py::handle error_type = py::register_exception<Error>(m, "Error", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  // --- ARMAV -------------------------------------------------------------
  py::class_<ArmavModel>(m, "ArmavModel")
      .def(py::init(&make_model), py::arg("phi"), py::arg("theta"), py::arg("mean") = py::none())
      .def_property_readonly("phi", &ArmavModel::phi)
      .def_property_readonly("theta", &ArmavModel::theta)
      .def_property_readonly("mean", &ArmavModel::mean)
      .def_property_readonly("residual_variance", &ArmavModel::residual_variance)
      .def_property_readonly("ar_order", &ArmavModel::ar_order)
      .def_property_readonly("ma_order", &ArmavModel::ma_order)
      .def_property_readonly("dim", &ArmavModel::dim)
      .def_property_readonly("warm", &ArmavModel::warm)
      .def("ar_spectral_radius", &ArmavModel::ar_spectral_radius)
      .def("ma_spectral_radius", &ArmavModel::ma_spectral_radius)
      .def("predict_one_step", &ArmavModel::predict_one_step)
      .def("predict_k_steps", [](const ArmavModel& self, int k) { return stack(self.predict_k_steps(k)); })
      .def("observe", &ArmavModel::observe, py::arg("z"))
      .def("reset", &ArmavModel::reset)
      .def("to_json", [](const ArmavModel& self) { return armav_to_json(self); })
      .def_static("from_json", &armav_from_json)
      .def("__repr__", [](const ArmavModel& self) {
        return "<ArmavModel (" + std::to_string(self.ar_order()) + "," + std::to_string(self.ma_order()) +
               ") dim " + std::to_string(self.dim()) + ">";
      });

  m.def(
      "fit_armav",
      [](const Eigen::MatrixXd& data, int n, int m_order) {
        const ArmavFit fit = fit_armav(SeriesWindow(data), n, m_order);
        return py::make_tuple(fit.model, fit.residuals, fit.diagnostics.rss);
      },
      py::arg("data"), py::arg("n"), py::arg("m"),
      "Inverse-function fit of ARMAV(n, m) to an N x r array. Returns (model, residuals, rss).");

  m.def(
      "select_order",
      [](const Eigen::MatrixXd& data, double alpha, int max_k) {
        const OrderSelection sel = select_order(SeriesWindow(data), alpha, max_k);
        return py::make_tuple(sel.n, sel.m, sel.fit.model);
      },
      py::arg("data"), py::arg("alpha") = 0.95, py::arg("max_k") = 4, "F-test order search. Returns (n, m, model).");

  m.def("f_quantile", &f_quantile, py::arg("alpha"), py::arg("d1"), py::arg("d2"));

  m.def(
      "whiteness_fraction",
      [](const Eigen::MatrixXd& residuals, int max_lag) {
        return whiteness_fraction(residual_autocorrelation(residuals, max_lag), static_cast<int>(residuals.rows()));
      },
      py::arg("residuals"), py::arg("max_lag") = 20);

  m.def(
      "fit_error_log",
      [](const std::string& path, std::optional<std::pair<int, int>> order, double supported_weight,
         bool input_gain) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
        const ErrorBuffer buffer = ErrorBuffer::read_csv(in);
        const ErrorModelFitOptions options{supported_weight, input_gain};
        const ErrorModelFit fit = order ? fit_error_model(buffer, order->first, order->second, options)
                                        : fit_error_model_auto(buffer, 0.95, 4, options);
        py::dict d;
        d["n"] = fit.n;
        d["m"] = fit.m;
        d["model"] = fit.model.core();
        d["c_matrix"] = Eigen::MatrixXd(fit.model.c_matrix());
        d["residuals"] = fit.residuals;
        return d;
      },
      py::arg("path"), py::arg("order") = py::none(), py::arg("supported_weight") = 23.7 * kGravity,
      py::arg("input_gain") = true);

  // --- QP ----------------------------------------------------------------
  m.def(
      "solve_qp",
      [](const Eigen::MatrixXd& h, const Eigen::VectorXd& f, std::optional<Eigen::MatrixXd> a_ineq,
         std::optional<Eigen::VectorXd> lower, std::optional<Eigen::VectorXd> upper,
         std::optional<Eigen::MatrixXd> a_eq, std::optional<Eigen::VectorXd> b_eq,
         std::optional<Eigen::VectorXd> warm_start) {
        const Eigen::Index n = f.size();
        QpProblem qp;
        qp.h = h;
        qp.f = f;
        qp.a_ineq = a_ineq.value_or(Eigen::MatrixXd(0, n));
        const Eigen::Index rows = qp.a_ineq.rows();
        const double inf = std::numeric_limits<double>::infinity();
        qp.lower = lower.value_or(Eigen::VectorXd::Constant(rows, -inf));
        qp.upper = upper.value_or(Eigen::VectorXd::Constant(rows, inf));
        qp.a_eq = a_eq.value_or(Eigen::MatrixXd(0, n));
        qp.b_eq = b_eq.value_or(Eigen::VectorXd(0));
        const QpSolution sol = QpSolver().solve(qp, warm_start);
        py::dict d;
        d["y"] = sol.y;
        d["status"] = to_string(sol.status);
        d["objective"] = sol.objective;
        d["iterations"] = sol.iterations;
        d["kkt_residual"] = sol.kkt_residual;
        d["dual_lower"] = sol.dual_lower;
        d["dual_upper"] = sol.dual_upper;
        d["dual_eq"] = sol.dual_eq;
        return d;
      },
      py::arg("h"), py::arg("f"), py::arg("a_ineq") = py::none(), py::arg("lower") = py::none(),
      py::arg("upper") = py::none(), py::arg("a_eq") = py::none(), py::arg("b_eq") = py::none(),
      py::arg("warm_start") = py::none(), "min 1/2 y'Hy + f'y s.t. lower <= A y <= upper, A_eq y = b_eq.");

  // --- Scenarios -----------------------------------------------------------
  m.def("scenario_names", &scenario_names);
  m.def(
      "scenario_json", [](const std::string& name_or_path) { return scenario_to_json(load_scenario(name_or_path)); },
      py::arg("name_or_path"), "Full scenario configuration as JSON text.");
  m.def(
      "run_scenario",
      [](const std::string& config_json) {
        const ScenarioConfig cfg = scenario_from_json(config_json);
        ScenarioResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(cfg);
        }
        return result_dict(r);
      },
      py::arg("config_json"));
  m.def(
      "paired_compare",
      [](const std::string& config_json) {
        const ScenarioConfig cfg = scenario_from_json(config_json);
        ComparisonReport rep;
        {
          py::gil_scoped_release release;
          rep = paired_compare(cfg);
        }
        py::dict d;
        d["baseline"] = result_dict(rep.baseline);
        d["compensated"] = result_dict(rep.compensated);
        d["vibration_reduction"] = rep.vibration_reduction;
        d["height_offset_reduction"] = rep.height_offset_reduction;
        d["mae_reduction"] = Eigen::VectorXd(rep.mae_reduction);
        d["mse_reduction"] = Eigen::VectorXd(rep.mse_reduction);
        return d;
      },
      py::arg("config_json"));
}
