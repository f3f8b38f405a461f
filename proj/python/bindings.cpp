#include <dropsurv/baselines.hpp>
#include <dropsurv/cli.hpp>
#include <dropsurv/cox.hpp>
#include <dropsurv/error.hpp>
#include <dropsurv/eval.hpp>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace dropsurv;

namespace {

DesignMatrix design(const Eigen::MatrixXd& x, std::vector<int> times, std::vector<bool> events) {
  if (static_cast<std::size_t>(x.rows()) != times.size() || times.size() != events.size())
    throw ArgumentError("x, times and events must have the same number of rows");
  return make_design(x, std::move(times), std::move(events));
}

DesignMatrix regression_design(const Eigen::MatrixXd& x, std::vector<int> y) {
  std::vector<bool> events(y.size(), true);
  return design(x, std::move(y), std::move(events));
}

PredictionSet predictions(const std::vector<double>& predicted, const std::vector<int>& actual) {
  if (predicted.size() != actual.size()) throw ArgumentError("predicted and actual differ in length");
  PredictionSet out;
  for (std::size_t i = 0; i < predicted.size(); ++i) out.push_back({predicted[i], actual[i]});
  return out;
}

py::dict cox_dict(const CoxModel& m) {
  py::list baseline;
  for (const auto& s : m.baseline.steps) baseline.append(py::make_tuple(s.semester, s.hazard));
  py::dict d;
  d["beta"] = m.beta;
  d["standard_errors"] = m.standard_errors;
  d["baseline"] = baseline;
  d["log_likelihood"] = m.diagnostics.log_likelihood;
  d["initial_log_likelihood"] = m.diagnostics.initial_log_likelihood;
  d["iterations"] = m.diagnostics.iterations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cox proportional-hazards dropout-timing models with OLS and epsilon-SVR baselines";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("log_partial_likelihood",
        [](const Eigen::MatrixXd& x, std::vector<int> times, std::vector<bool> events, const Eigen::VectorXd& beta) {
          return log_partial_likelihood(design(x, std::move(times), std::move(events)), beta);
        },
        py::arg("x"), py::arg("times"), py::arg("events"), py::arg("beta"));
  m.def("pll_gradient",
        [](const Eigen::MatrixXd& x, std::vector<int> times, std::vector<bool> events, const Eigen::VectorXd& beta) {
          return Eigen::VectorXd(pll_gradient(design(x, std::move(times), std::move(events)), beta));
        },
        py::arg("x"), py::arg("times"), py::arg("events"), py::arg("beta"));
  m.def("pll_hessian",
        [](const Eigen::MatrixXd& x, std::vector<int> times, std::vector<bool> events, const Eigen::VectorXd& beta) {
          return Eigen::MatrixXd(pll_hessian(design(x, std::move(times), std::move(events)), beta));
        },
        py::arg("x"), py::arg("times"), py::arg("events"), py::arg("beta"));
  m.def("baseline_hazard",
        [](const Eigen::MatrixXd& x, std::vector<int> times, std::vector<bool> events, const Eigen::VectorXd& beta) {
          std::vector<std::pair<int, double>> out;
          for (const auto& s : baseline_hazard(design(x, std::move(times), std::move(events)), beta).steps)
            out.emplace_back(s.semester, s.hazard);
          return out;
        },
        py::arg("x"), py::arg("times"), py::arg("events"), py::arg("beta"));
  m.def("fit_cox",
        [](const Eigen::MatrixXd& x, std::vector<int> times, std::vector<bool> events) {
          return cox_dict(fit_cox(design(x, std::move(times), std::move(events))));
        },
        py::arg("x"), py::arg("times"), py::arg("events"));
  m.def("predict_semester",
        [](const std::vector<std::pair<int, double>>& baseline, double linear_predictor, double threshold,
           int horizon) {
          BaselineHazardTable table;
          for (auto [t, h] : baseline) table.steps.push_back({t, h});
          const auto p = predict_dropout_semester(survival_curve(table, linear_predictor), threshold, horizon);
          return py::make_tuple(p.semester, p.beyond_horizon);
        },
        py::arg("baseline"), py::arg("linear_predictor"), py::arg("threshold") = 0.5, py::arg("horizon") = 14);

  m.def("fit_ols",
        [](const Eigen::MatrixXd& x, std::vector<int> y) {
          const LinearModel lm = fit_ols(regression_design(x, std::move(y)));
          return py::make_tuple(lm.intercept, lm.weights);
        },
        py::arg("x"), py::arg("y"), "Returns (intercept, weights).");
  m.def("fit_svr",
        [](const Eigen::MatrixXd& x, std::vector<int> y, double epsilon, double cost, bool standardize) {
          SvrOptions o;
          o.epsilon = epsilon;
          o.cost = cost;
          o.standardize = standardize;
          const SvrModel s = fit_svr(regression_design(x, std::move(y)), o);
          py::dict d;
          d["weights"] = s.weights;
          d["bias"] = s.bias;
          d["dual_objective"] = s.diagnostics.dual_objective;
          d["primal_objective"] = s.diagnostics.primal_objective;
          d["relative_gap"] = s.diagnostics.relative_gap;
          d["iterations"] = s.diagnostics.iterations;
          return d;
        },
        py::arg("x"), py::arg("y"), py::arg("epsilon") = 0.5, py::arg("cost") = 1.0, py::arg("standardize") = true);

  m.def("mae", [](const std::vector<double>& p, const std::vector<int>& a) { return mae(predictions(p, a)); },
        py::arg("predicted"), py::arg("actual"));
  m.def("error_balance",
        [](const std::vector<double>& p, const std::vector<int>& a) {
          const auto b = error_balance(predictions(p, a));
          py::dict d;
          d["under"] = b.under;
          d["over"] = b.over;
          d["exact"] = b.exact;
          d["uper"] = b.uper;
          d["oper"] = b.oper;
          return d;
        },
        py::arg("predicted"), py::arg("actual"), "UPER/OPER are None when every prediction is exact.");

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = run_cli(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs one dropsurv command in-process; returns (exit code, stdout, stderr).");
}
