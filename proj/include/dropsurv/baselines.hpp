#pragma once

#include <dropsurv/dataio.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace dropsurv {

/// Which rows feed a baseline regressor.
enum class TargetPolicy {
  event_rows_only,  // censored students dropped (default)
  all_rows,         // censoring time treated as if it were the dropout semester
};

/// y = intercept + weights . x, x in design-matrix units.
struct LinearModel {
  double intercept = 0.0;
  Eigen::VectorXd weights;
  Encoder encoder;
  std::size_t training_rows = 0;

  const std::vector<std::string>& column_names() const { return encoder.columns(); }
};

/// Least squares over the selected rows via column-pivoted Householder QR.
/// Throws UnderdeterminedError or RankDeficiencyError (naming columns).
LinearModel fit_ols(const DesignMatrix& data, TargetPolicy policy = TargetPolicy::event_rows_only);

double predict_linear(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& encoded);
double predict_linear(const LinearModel& model, const Covariates& x);

struct SvrOptions {
  double epsilon = 0.5;
  double cost = 1.0;
  /// Stop when the maximal KKT violation over working pairs falls below this
  /// and the relative duality gap below `gap_tolerance`.
  double tolerance = 1e-6;
  double gap_tolerance = 1e-6;
  long max_iterations = 10'000'000;
  /// Z-score columns internally (weights are mapped back to design units), so
  /// the fit does not depend on the design's own scaling.
  bool standardize = true;

  void validate() const;
};

struct SvrDiagnostics {
  long iterations = 0;
  /// 1/2 |w|^2 + C sum max(0, |y - w.x - b| - eps), in the solver's units.
  double primal_objective = 0.0;
  /// Dual value (maximization form); equals the primal at the optimum.
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double max_violation = 0.0;
};

/// Linear soft-margin epsilon-SVR: f(x) = weights . x + bias.
struct SvrModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double epsilon = 0.5;
  double cost = 1.0;
  /// Training rows (design-matrix indices) with |residual| >= epsilon - 1e-9.
  std::vector<std::size_t> support_indices;
  /// alpha_i - alpha_i^* per training row used (design-matrix order, event rows only).
  Eigen::VectorXd dual_coefficients;
  std::vector<std::size_t> training_indices;
  Encoder encoder;
  SvrDiagnostics diagnostics;

  const std::vector<std::string>& column_names() const { return encoder.columns(); }
};

/// Solves the dual (box constraints [0, C] plus the equality from the free
/// bias) by two-coordinate descent with second-order working-pair selection.
/// Uses event rows only. Throws ConvergenceError with the final violation.
SvrModel fit_svr(const DesignMatrix& data, const SvrOptions& options = {});

double predict_svr(const SvrModel& model, const Eigen::Ref<const Eigen::VectorXd>& encoded);
double predict_svr(const SvrModel& model, const Covariates& x);

namespace detail {

/// Primal epsilon-SVR objective for fixed w minimized exactly over the bias;
/// returns (objective, bias). The minimizing bias set is an interval; its
/// midpoint is returned.
std::pair<double, double> svr_primal_best_bias(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& w, double epsilon, double cost);

}  // namespace detail

}  // namespace dropsurv
