#pragma once

#include <dropsurv/dataio.hpp>

#include <Eigen/Dense>

#include <vector>

namespace dropsurv {

/// Newton-Raphson controls for the partial-likelihood fit.
struct FitOptions {
  int max_iterations = 100;
  /// Stop once the Newton step's predicted gain is below this, or an
  /// iteration gains less than this while the gradient max-norm is below
  /// `gradient_tolerance`.
  double tolerance = 1e-9;
  double gradient_tolerance = 1e-6;
  int max_step_halvings = 20;
  /// Relative diagonal jitter applied when the information matrix fails a
  /// Cholesky factorization; also the singularity threshold on its spectrum.
  double ridge_jitter = 1e-8;

  void validate() const;
};

struct BaselineStep {
  int semester = 0;
  double hazard = 0.0;

  bool operator==(const BaselineStep&) const = default;
};

/// Breslow baseline hazard increments at the distinct event semesters.
struct BaselineHazardTable {
  std::vector<BaselineStep> steps;

  /// Sum of increments at semesters <= t.
  double cumulative(int t) const;

  bool operator==(const BaselineHazardTable&) const = default;
};

struct SurvivalPoint {
  int semester = 0;
  double survival = 1.0;
};

/// Right-continuous step function; points[0] is (0, 1), followed by one point
/// per baseline event semester.
struct SurvivalCurve {
  std::vector<SurvivalPoint> points;

  double at(int semester) const;
};

struct FitDiagnostics {
  int iterations = 0;
  double initial_log_likelihood = 0.0;
  double log_likelihood = 0.0;
  double gradient_max_norm = 0.0;

  bool operator==(const FitDiagnostics&) const = default;
};

struct CoxModel {
  Eigen::VectorXd beta;
  /// sqrt of the diagonal of the inverse information at beta.
  Eigen::VectorXd standard_errors;
  BaselineHazardTable baseline;
  Encoder encoder;
  FitDiagnostics diagnostics;

  const std::vector<std::string>& column_names() const { return encoder.columns(); }
  double linear_predictor(const Eigen::Ref<const Eigen::VectorXd>& encoded) const { return beta.dot(encoded); }
  /// Coefficients per raw (unstandardized) unit of each column.
  Eigen::VectorXd raw_coefficients() const;
};

/// Log partial likelihood with Breslow ties: every event at a tied semester
/// shares the full risk set {j : t_j >= t}. Throws LikelihoodError without events.
double log_partial_likelihood(const DesignMatrix& data, const Eigen::VectorXd& beta);
Eigen::VectorXd pll_gradient(const DesignMatrix& data, const Eigen::VectorXd& beta);
Eigen::MatrixXd pll_hessian(const DesignMatrix& data, const Eigen::VectorXd& beta);

struct PartialLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Value, gradient and Hessian in one pass over the risk sets.
PartialLikelihood evaluate_partial_likelihood(const DesignMatrix& data, const Eigen::VectorXd& beta);

/// h0(t_(i)) = d_i / sum_{j in R(t_(i))} exp(beta x_j).
BaselineHazardTable baseline_hazard(const DesignMatrix& data, const Eigen::VectorXd& beta);

/// Maximizes the partial likelihood from beta = 0. Throws ConvergenceError,
/// RankDeficiencyError (naming suspect columns) or LikelihoodError.
CoxModel fit_cox(const DesignMatrix& data, const FitOptions& options = {});

/// S(t | x) = exp(-H0(t))^exp(linear_predictor).
SurvivalCurve survival_curve(const BaselineHazardTable& baseline, double linear_predictor);
SurvivalCurve survival_curve(const CoxModel& model, const Eigen::Ref<const Eigen::VectorXd>& encoded);
SurvivalCurve survival_curve(const CoxModel& model, const Covariates& x);

struct SemesterPrediction {
  int semester = 0;
  bool beyond_horizon = false;

  bool operator==(const SemesterPrediction&) const = default;
};

/// First curve semester with S <= threshold; (horizon, true) when none occurs
/// at or before the horizon.
SemesterPrediction predict_dropout_semester(const SurvivalCurve& curve, double threshold = 0.5, int horizon = 14);
SemesterPrediction predict_dropout_semester(const CoxModel& model, const Covariates& x, double threshold = 0.5,
                                            int horizon = 14);

}  // namespace dropsurv
