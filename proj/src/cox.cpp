#include <dropsurv/cox.hpp>
#include <dropsurv/error.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dropsurv {

namespace {

/// Subjects grouped by distinct observed semester, latest first, so that
/// risk sets grow by whole groups.
struct RiskSets {
  struct Group {
    int semester;
    std::vector<Eigen::Index> members;
    std::vector<Eigen::Index> events;
  };
  std::vector<Group> groups;
  std::size_t event_count = 0;

  explicit RiskSets(const DesignMatrix& data) {
    if (static_cast<std::size_t>(data.rows()) != data.times.size() || data.times.size() != data.events.size())
      throw ArgumentError("design matrix rows, times and events differ in length");
    std::vector<Eigen::Index> order(data.times.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return data.times[a] > data.times[b]; });
    for (auto i : order) {
      if (groups.empty() || groups.back().semester != data.times[i]) groups.push_back({data.times[i], {}, {}});
      groups.back().members.push_back(i);
      if (data.events[i]) {
        groups.back().events.push_back(i);
        ++event_count;
      }
    }
    if (event_count == 0) throw LikelihoodError("partial likelihood is undefined: the data contain no events");
  }
};

/// Running sums over the current risk set of exp(eta - shift) * {1, x, x x^T};
/// the shift tracks the largest eta seen so sums never overflow.
class RiskAccumulator {
 public:
  RiskAccumulator(Eigen::Index p, bool second_order)
      : s1_(Eigen::VectorXd::Zero(p)), second_order_(second_order) {
    if (second_order_) s2_ = Eigen::MatrixXd::Zero(p, p);
  }

  void add(double eta, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (eta > shift_) {
      const double scale = std::exp(shift_ - eta);
      s0_ *= scale;
      s1_ *= scale;
      if (second_order_) s2_ *= scale;
      shift_ = eta;
    }
    const double w = std::exp(eta - shift_);
    s0_ += w;
    s1_.noalias() += w * x.transpose();
    if (second_order_) s2_.noalias() += w * x.transpose() * x;
  }

  double log_sum() const { return shift_ + std::log(s0_); }

  /// count / sum of exp(eta); exact when every eta is zero.
  double ratio(double count) const {
    const double direct = count / s0_ * std::exp(-shift_);
    return std::isfinite(direct) ? direct : std::exp(std::log(count) - log_sum());
  }
  Eigen::VectorXd mean() const { return s1_ / s0_; }
  Eigen::MatrixXd second_moment() const { return s2_ / s0_; }

 private:
  double shift_ = -std::numeric_limits<double>::infinity();
  double s0_ = 0.0;
  Eigen::VectorXd s1_;
  Eigen::MatrixXd s2_;
  bool second_order_;
};

enum class Order { value, gradient, hessian };

PartialLikelihood evaluate(const DesignMatrix& data, const RiskSets& sets, const Eigen::VectorXd& beta,
                           Order order) {
  const Eigen::Index p = data.cols();
  if (beta.size() != p) throw ArgumentError("beta has " + std::to_string(beta.size()) + " entries, design has " +
                                            std::to_string(p) + " columns");
  if (!beta.allFinite()) throw ArgumentError("beta must be finite");
  const Eigen::VectorXd eta = data.x * beta;

  PartialLikelihood out;
  if (order != Order::value) out.gradient = Eigen::VectorXd::Zero(p);
  if (order == Order::hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);

  RiskAccumulator acc(p, order == Order::hessian);
  for (const auto& g : sets.groups) {
    for (auto i : g.members) acc.add(eta[i], data.x.row(i));
    if (g.events.empty()) continue;
    const double d = double(g.events.size());
    const double log_sum = acc.log_sum();
    for (auto i : g.events) out.value += eta[i];
    out.value -= d * log_sum;
    if (order == Order::value) continue;
    const Eigen::VectorXd mean = acc.mean();
    for (auto i : g.events) out.gradient += data.x.row(i).transpose();
    out.gradient -= d * mean;
    if (order == Order::hessian) out.hessian -= d * (acc.second_moment() - mean * mean.transpose());
  }
  return out;
}

std::string suspect_columns(const Eigen::VectorXd& null_direction, const std::vector<std::string>& names) {
  const double largest = null_direction.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < null_direction.size(); ++j)
    if (std::abs(null_direction[j]) >= 0.1 * largest) idx.push_back(j);
  std::sort(idx.begin(), idx.end(),
            [&](auto a, auto b) { return std::abs(null_direction[a]) > std::abs(null_direction[b]); });
  std::string out;
  for (auto j : idx) {
    if (!out.empty()) out += ", ";
    out += static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)] : "x" + std::to_string(j + 1);
  }
  return out;
}

std::string describe(const FitDiagnostics& d) {
  std::ostringstream s;
  s.precision(10);
  s << "iterations=" << d.iterations << ", log partial likelihood=" << d.log_likelihood
    << ", gradient max-norm=" << d.gradient_max_norm;
  return s.str();
}

}  // namespace

void FitOptions::validate() const {
  if (max_iterations <= 0 || !(tolerance > 0) || !(gradient_tolerance > 0) || max_step_halvings <= 0 ||
      !(ridge_jitter > 0))
    throw ArgumentError("fit options must all be positive");
}

double BaselineHazardTable::cumulative(int t) const {
  double total = 0.0;
  for (const auto& s : steps) {
    if (s.semester > t) break;
    total += s.hazard;
  }
  return total;
}

double SurvivalCurve::at(int semester) const {
  double value = 1.0;
  for (const auto& p : points) {
    if (p.semester > semester) break;
    value = p.survival;
  }
  return value;
}

Eigen::VectorXd CoxModel::raw_coefficients() const {
  Eigen::VectorXd raw = beta;
  const auto& scaling = encoder.scaling();
  for (Eigen::Index j = 0; j < raw.size(); ++j)
    if (static_cast<std::size_t>(j) < scaling.size() && scaling[static_cast<std::size_t>(j)])
      raw[j] /= scaling[static_cast<std::size_t>(j)]->sd;
  return raw;
}

double log_partial_likelihood(const DesignMatrix& data, const Eigen::VectorXd& beta) {
  return evaluate(data, RiskSets(data), beta, Order::value).value;
}

Eigen::VectorXd pll_gradient(const DesignMatrix& data, const Eigen::VectorXd& beta) {
  return evaluate(data, RiskSets(data), beta, Order::gradient).gradient;
}

Eigen::MatrixXd pll_hessian(const DesignMatrix& data, const Eigen::VectorXd& beta) {
  return evaluate(data, RiskSets(data), beta, Order::hessian).hessian;
}

PartialLikelihood evaluate_partial_likelihood(const DesignMatrix& data, const Eigen::VectorXd& beta) {
  return evaluate(data, RiskSets(data), beta, Order::hessian);
}

BaselineHazardTable baseline_hazard(const DesignMatrix& data, const Eigen::VectorXd& beta) {
  const RiskSets sets(data);
  if (beta.size() != data.cols() || !beta.allFinite()) throw ArgumentError("beta must be finite with one entry per column");
  const Eigen::VectorXd eta = data.x * beta;
  RiskAccumulator acc(data.cols(), false);
  BaselineHazardTable table;
  for (const auto& g : sets.groups) {
    for (auto i : g.members) acc.add(eta[i], data.x.row(i));
    if (g.events.empty()) continue;
    table.steps.push_back({g.semester, acc.ratio(double(g.events.size()))});
  }
  std::reverse(table.steps.begin(), table.steps.end());
  return table;
}

CoxModel fit_cox(const DesignMatrix& data, const FitOptions& options) {
  options.validate();
  const RiskSets sets(data);
  const Eigen::Index p = data.cols();
  if (p < 1) throw ArgumentError("design matrix has no columns");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  PartialLikelihood current = evaluate(data, sets, beta, Order::hessian);
  FitDiagnostics diag;
  diag.initial_log_likelihood = current.value;

  auto check_rank = [&](const Eigen::MatrixXd& information) -> double {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
    const double largest = eig.eigenvalues().maxCoeff();
    const double smallest = eig.eigenvalues().minCoeff();
    if (!(smallest > options.ridge_jitter * std::max(largest, 1.0))) {
      std::ostringstream msg;
      msg << "rank-deficient design: information matrix is numerically singular (smallest eigenvalue " << smallest
          << ", largest " << largest << "); suspect columns: "
          << suspect_columns(eig.eigenvectors().col(0), data.column_names);
      throw RankDeficiencyError(msg.str());
    }
    return largest;
  };

  bool converged = false;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    diag.iterations = iter;
    const Eigen::MatrixXd information = -current.hessian;
    const double largest = check_rank(information);

    Eigen::LLT<Eigen::MatrixXd> llt(information);
    if (llt.info() != Eigen::Success) {
      Eigen::MatrixXd jittered = information;
      jittered.diagonal().array() += options.ridge_jitter * largest;
      llt.compute(jittered);
      if (llt.info() != Eigen::Success)
        throw RankDeficiencyError("information matrix is not positive definite even after ridge jitter");
    }
    const Eigen::VectorXd step = llt.solve(current.gradient);

    // Predicted gain of the full Newton step. Once it drops below the
    // tolerance the quadratic model is exact to working precision, even
    // where the likelihood itself can no longer resolve the ascent.
    if (0.5 * current.gradient.dot(step) < options.tolerance) {
      beta += step;
      current = evaluate(data, sets, beta, Order::hessian);
      diag.log_likelihood = current.value;
      diag.gradient_max_norm = current.gradient.cwiseAbs().maxCoeff();
      converged = true;
      break;
    }

    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double candidate_value = 0.0;
    for (int h = 0; h <= options.max_step_halvings; ++h, scale *= 0.5) {
      candidate = beta + scale * step;
      if (!candidate.allFinite()) continue;
      candidate_value = evaluate(data, sets, candidate, Order::value).value;
      if (std::isfinite(candidate_value) && candidate_value >= current.value) {
        accepted = true;
        break;
      }
    }

    const double grad_norm = current.gradient.cwiseAbs().maxCoeff();
    if (!accepted) {
      // No ascent left at machine precision: fine if already stationary.
      diag.log_likelihood = current.value;
      diag.gradient_max_norm = grad_norm;
      if (grad_norm < options.gradient_tolerance) {
        converged = true;
        break;
      }
      throw ConvergenceError("step halving exhausted without improvement (" + describe(diag) + ")");
    }

    const double gain = candidate_value - current.value;
    beta = candidate;
    current = evaluate(data, sets, beta, Order::hessian);
    diag.log_likelihood = current.value;
    diag.gradient_max_norm = current.gradient.cwiseAbs().maxCoeff();
    if (std::abs(gain) < options.tolerance && diag.gradient_max_norm < options.gradient_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("no convergence after " + std::to_string(options.max_iterations) + " iterations (" +
                           describe(diag) + ")");

  const Eigen::MatrixXd information = -current.hessian;
  check_rank(information);

  CoxModel model;
  model.beta = beta;
  model.standard_errors = information.inverse().diagonal().cwiseSqrt();
  model.baseline = baseline_hazard(data, beta);
  model.encoder = Encoder(data);
  model.diagnostics = diag;
  return model;
}

SurvivalCurve survival_curve(const BaselineHazardTable& baseline, double linear_predictor) {
  SurvivalCurve curve;
  curve.points.reserve(baseline.steps.size() + 1);
  curve.points.push_back({0, 1.0});
  const double risk = std::exp(linear_predictor);
  double cumulative = 0.0;
  for (const auto& s : baseline.steps) {
    cumulative += s.hazard;
    curve.points.push_back({s.semester, std::exp(-cumulative * risk)});
  }
  return curve;
}

SurvivalCurve survival_curve(const CoxModel& model, const Eigen::Ref<const Eigen::VectorXd>& encoded) {
  if (encoded.size() != model.beta.size())
    throw ArgumentError("encoded covariate vector has " + std::to_string(encoded.size()) + " entries, model has " +
                        std::to_string(model.beta.size()));
  return survival_curve(model.baseline, model.linear_predictor(encoded));
}

SurvivalCurve survival_curve(const CoxModel& model, const Covariates& x) {
  return survival_curve(model, model.encoder.transform(x));
}

SemesterPrediction predict_dropout_semester(const SurvivalCurve& curve, double threshold, int horizon) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ArgumentError("threshold must lie in (0, 1)");
  if (horizon < 1) throw ArgumentError("horizon must be ≥ 1");
  for (const auto& p : curve.points) {
    if (p.semester < 1) continue;
    if (p.semester > horizon) break;
    if (p.survival <= threshold) return {p.semester, false};
  }
  return {horizon, true};
}

SemesterPrediction predict_dropout_semester(const CoxModel& model, const Covariates& x, double threshold,
                                            int horizon) {
  return predict_dropout_semester(survival_curve(model, x), threshold, horizon);
}

}  // namespace dropsurv
