#include <dropsurv/baselines.hpp>
#include <dropsurv/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dropsurv {

// Dual of the linear epsilon-SVR in the doubled variable form
//
//   min_a  1/2 a^T Qbar a + p^T a    s.t.  z^T a = 0,  0 <= a_t <= C
//
// with a = [alpha; alpha*], z = [+1...; -1...], p = [eps - y; eps + y] and
// Qbar_st = z_s z_t x_s . x_t. Then w = sum_t z_t a_t x_t and the gradient is
// G_t = z_t (x_t . w) + p_t, so only X w needs to be kept current.

namespace {

constexpr double kTau = 1e-12;

struct Problem {
  Eigen::MatrixXd x;  // l x p, solver units
  Eigen::VectorXd y;
  double epsilon;
  double cost;
};

struct Solution {
  Eigen::VectorXd alpha;  // 2l
  Eigen::VectorXd w;
  double bias = 0.0;
  SvrDiagnostics diag;
};

double dual_value(const Problem& pb, const Eigen::VectorXd& a, const Eigen::VectorXd& w) {
  const Eigen::Index l = pb.y.size();
  double linear = 0.0;
  for (Eigen::Index i = 0; i < l; ++i)
    linear += (pb.epsilon - pb.y[i]) * a[i] + (pb.epsilon + pb.y[i]) * a[i + l];
  return -(0.5 * w.squaredNorm() + linear);
}

Solution solve(const Problem& pb, const SvrOptions& options) {
  const Eigen::Index l = pb.y.size();
  const Eigen::Index m = 2 * l;
  const double c = pb.cost;

  Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(pb.x.cols());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(l);  // X w
  const Eigen::VectorXd kdiag = pb.x.rowwise().squaredNorm();

  auto z = [l](Eigen::Index t) { return t < l ? 1.0 : -1.0; };
  auto row = [l](Eigen::Index t) { return t < l ? t : t - l; };
  auto grad = [&](Eigen::Index t) {
    const Eigen::Index r = row(t);
    return z(t) * f[r] + (t < l ? pb.epsilon - pb.y[r] : pb.epsilon + pb.y[r]);
  };
  auto at_upper = [&](Eigen::Index t) { return a[t] >= c; };
  auto at_lower = [&](Eigen::Index t) { return a[t] <= 0.0; };

  Solution sol;
  double selection_tol = options.tolerance;
  double violation = std::numeric_limits<double>::infinity();
  long iter = 0;
  Eigen::VectorXd krow(l);

  for (;;) {
    // Working pair: i maximizes -z G over I_up; j by second-order gain over I_low.
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < m; ++t) {
      const double g = grad(t);
      if (z(t) > 0 ? !at_upper(t) : !at_lower(t)) {
        if (-z(t) * g >= gmax) {
          gmax = -z(t) * g;
          i = t;
        }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    if (i >= 0) {
      krow.noalias() = pb.x * pb.x.row(row(i)).transpose();
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index t = 0; t < m; ++t) {
        if (z(t) > 0 ? at_lower(t) : at_upper(t)) continue;
        const double g = grad(t);
        gmax2 = std::max(gmax2, z(t) * g);
        const double diff = gmax + z(t) * g;
        if (diff > 0) {
          double quad = kdiag[row(i)] + kdiag[row(t)] - 2.0 * krow[row(t)];
          if (quad <= 0) quad = kTau;
          const double gain = -(diff * diff) / quad;
          if (gain <= best) {
            best = gain;
            j = t;
          }
        }
      }
    }
    violation = (i >= 0 && j >= 0) ? gmax + gmax2 : 0.0;

    if (violation < selection_tol || j < 0) {
      const double dual = dual_value(pb, a, w);
      const auto [primal, bias] = detail::svr_primal_best_bias(pb.x, pb.y, w, pb.epsilon, pb.cost);
      const double gap = (primal - dual) / std::max(1.0, std::abs(primal));
      sol.diag.primal_objective = primal;
      sol.diag.dual_objective = dual;
      sol.diag.relative_gap = gap;
      sol.bias = bias;
      if (gap <= options.gap_tolerance || selection_tol < 1e-14 || j < 0) break;
      selection_tol /= 10.0;
      continue;
    }
    if (++iter > options.max_iterations) {
      std::ostringstream msg;
      msg << "epsilon-SVR did not converge in " << options.max_iterations << " iterations (max violation "
          << violation << ")";
      throw ConvergenceError(msg.str());
    }

    // Analytic two-variable update, clipped to the box.
    const double ci = c, cj = c;
    const double old_i = a[i], old_j = a[j];
    const double kij = krow[row(j)];
    const double qij = z(i) * z(j) * kij;
    const double gi = grad(i), gj = grad(j);
    if (z(i) != z(j)) {
      double quad = kdiag[row(i)] + kdiag[row(j)] + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-gi - gj) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) { a[j] = 0; a[i] = diff; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = -diff; }
      }
      if (diff > ci - cj) {
        if (a[i] > ci) { a[i] = ci; a[j] = ci - diff; }
      } else {
        if (a[j] > cj) { a[j] = cj; a[i] = cj + diff; }
      }
    } else {
      double quad = kdiag[row(i)] + kdiag[row(j)] - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (gi - gj) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > ci) {
        if (a[i] > ci) { a[i] = ci; a[j] = sum - ci; }
      } else {
        if (a[j] < 0) { a[j] = 0; a[i] = sum; }
      }
      if (sum > cj) {
        if (a[j] > cj) { a[j] = cj; a[i] = sum - cj; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = sum; }
      }
    }

    const double di = (a[i] - old_i) * z(i);
    const double dj = (a[j] - old_j) * z(j);
    if (di == 0.0 && dj == 0.0) continue;
    Eigen::VectorXd dw = di * pb.x.row(row(i)).transpose();
    dw.noalias() += dj * pb.x.row(row(j)).transpose();
    w += dw;
    f.noalias() += pb.x * dw;
  }

  sol.alpha = a;
  sol.w = w;
  sol.diag.iterations = iter;
  sol.diag.max_violation = violation;
  return sol;
}

}  // namespace

namespace detail {

std::pair<double, double> svr_primal_best_bias(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& w, double epsilon, double cost) {
  const Eigen::VectorXd r = y - x * w;
  const auto n = static_cast<std::size_t>(r.size());
  std::vector<double> lo(n), hi(n), points;
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = r[static_cast<Eigen::Index>(i)] - epsilon;
    hi[i] = r[static_cast<Eigen::Index>(i)] + epsilon;
  }
  std::sort(lo.begin(), lo.end());
  std::sort(hi.begin(), hi.end());
  points.reserve(2 * n);
  std::merge(lo.begin(), lo.end(), hi.begin(), hi.end(), std::back_inserter(points));

  // Loss slope just right of b: #{hi <= b} - #{lo > b}; just left: #{hi < b} - #{lo >= b}.
  auto right_slope = [&](double b) {
    const auto hi_le = std::upper_bound(hi.begin(), hi.end(), b) - hi.begin();
    const auto lo_gt = lo.end() - std::upper_bound(lo.begin(), lo.end(), b);
    return hi_le - lo_gt;
  };
  auto left_slope = [&](double b) {
    const auto hi_lt = std::lower_bound(hi.begin(), hi.end(), b) - hi.begin();
    const auto lo_ge = lo.end() - std::lower_bound(lo.begin(), lo.end(), b);
    return hi_lt - lo_ge;
  };
  double left = points.front();
  for (double b : points)
    if (right_slope(b) >= 0) {
      left = b;
      break;
    }
  double right = points.back();
  for (auto it = points.rbegin(); it != points.rend(); ++it)
    if (left_slope(*it) <= 0) {
      right = *it;
      break;
    }
  const double bias = 0.5 * (left + right);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) loss += std::max(0.0, std::abs(r[i] - bias) - epsilon);
  return {0.5 * w.squaredNorm() + cost * loss, bias};
}

}  // namespace detail

void SvrOptions::validate() const {
  if (!(epsilon > 0) || !(cost > 0) || !(tolerance > 0) || !(gap_tolerance > 0) || max_iterations <= 0)
    throw ArgumentError("SVR options: epsilon, cost, tolerances and the iteration cap must be positive");
}

SvrModel fit_svr(const DesignMatrix& data, const SvrOptions& options) {
  options.validate();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.events.size(); ++i)
    if (data.events[i]) rows.push_back(i);
  if (rows.size() < 2)
    throw UnderdeterminedError("epsilon-SVR needs at least 2 event rows, got " + std::to_string(rows.size()));

  const Eigen::Index p = data.cols();
  const auto l = static_cast<Eigen::Index>(rows.size());
  Problem pb{Eigen::MatrixXd(l, p), Eigen::VectorXd(l), options.epsilon, options.cost};
  for (Eigen::Index k = 0; k < l; ++k) {
    pb.x.row(k) = data.x.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]));
    pb.y[k] = data.times[rows[static_cast<std::size_t>(k)]];
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sd = Eigen::VectorXd::Ones(p);
  if (options.standardize) {
    mean = pb.x.colwise().mean().transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
      const double s = std::sqrt((pb.x.col(j).array() - mean[j]).square().sum() / double(std::max<Eigen::Index>(l - 1, 1)));
      sd[j] = s > 0 ? s : 1.0;
    }
    pb.x = ((pb.x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array()).matrix();
  }

  const Solution sol = solve(pb, options);

  SvrModel model;
  model.epsilon = options.epsilon;
  model.cost = options.cost;
  model.weights = sol.w.cwiseQuotient(sd);
  model.bias = sol.bias - model.weights.dot(mean);
  model.dual_coefficients = sol.alpha.head(l) - sol.alpha.tail(l);
  model.training_indices = rows;
  model.encoder = Encoder(data);
  model.diagnostics = sol.diag;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(rows[k]);
    const double residual = data.times[rows[k]] - (data.x.row(i).dot(model.weights) + model.bias);
    if (std::abs(residual) >= options.epsilon - 1e-9) model.support_indices.push_back(rows[k]);
  }
  return model;
}

double predict_svr(const SvrModel& model, const Eigen::Ref<const Eigen::VectorXd>& encoded) {
  if (encoded.size() != model.weights.size()) throw ArgumentError("encoded covariate vector has the wrong length");
  return model.weights.dot(encoded) + model.bias;
}

double predict_svr(const SvrModel& model, const Covariates& x) {
  return predict_svr(model, model.encoder.transform(x));
}

}  // namespace dropsurv
