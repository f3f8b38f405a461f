#include "oracles/risk_set.hpp"
#include "support.hpp"

#include <dropsurv/cox.hpp>
#include <dropsurv/error.hpp>

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace dropsurv;

namespace {

DesignMatrix design(std::vector<std::vector<double>> rows, std::vector<int> times, std::vector<bool> events) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return make_design(std::move(x), std::move(times), std::move(events));
}

std::vector<oracle::Subject> subjects(const DesignMatrix& d) {
  std::vector<oracle::Subject> out;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    oracle::Subject s;
    for (Eigen::Index j = 0; j < d.cols(); ++j) s.x.push_back(d.x(i, j));
    s.time = d.times[static_cast<std::size_t>(i)];
    s.event = d.events[static_cast<std::size_t>(i)];
    out.push_back(s);
  }
  return out;
}

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

DesignMatrix shuffled_column_design(std::mt19937_64& rng, int n) {
  // Covariate drawn independently of the times: no association by construction.
  DesignMatrix d = testing::random_design(rng, n, 1, 8, 0.8);
  return d;
}

}  // namespace

TEST_CASE("three distinct events at beta = 0 give -(ln 3 + ln 2 + ln 1)") {
  const auto d = design({{0.3}, {-1.0}, {2.0}}, {1, 2, 3}, {true, true, true});
  CHECK(log_partial_likelihood(d, Eigen::VectorXd::Zero(1)) == doctest::Approx(-std::log(6.0)).epsilon(1e-15));
  CHECK(log_partial_likelihood(d, Eigen::VectorXd::Zero(1)) == doctest::Approx(-1.791759).epsilon(1e-6));
}

TEST_CASE("a single subject with an event has zero log likelihood and gradient") {
  const auto d = design({{1.7, -0.2}}, {3}, {true});
  for (double b : {-3.0, 0.0, 0.4, 5.0}) {
    const Eigen::Vector2d beta(b, -b / 2);
    CHECK(log_partial_likelihood(d, beta) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(pll_gradient(d, beta).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("four-subject example matches risk-set enumeration") {
  const auto d = design({{0}, {1}, {0}, {1}}, {1, 2, 3, 4}, {true, true, true, true});
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 0.5);
  const auto subj = subjects(d);
  CHECK(std::abs(log_partial_likelihood(d, beta) - oracle::log_partial_likelihood(subj, {0.5})) < 1e-12);
  CHECK(std::abs(pll_gradient(d, beta)[0] - oracle::gradient(subj, {0.5})[0]) < 1e-12);
}

TEST_CASE("two-subject gradient by hand enumeration is -0.5") {
  const auto d = design({{0}, {1}}, {1, 2}, {true, true});
  CHECK(pll_gradient(d, Eigen::VectorXd::Zero(1))[0] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("tied events share the full risk set") {
  const auto d = design({{0.2}, {1.0}, {-0.5}, {0.7}}, {1, 1, 2, 2}, {true, true, true, false});
  const auto subj = subjects(d);
  for (double b : {-1.0, 0.0, 0.8}) {
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, b);
    CHECK(std::abs(log_partial_likelihood(d, beta) - oracle::log_partial_likelihood(subj, {b})) < 1e-12);
  }
}

TEST_CASE("zero events: the likelihood is undefined") {
  const auto d = design({{0.0}, {1.0}}, {1, 2}, {false, false});
  CHECK_THROWS_AS(log_partial_likelihood(d, Eigen::VectorXd::Zero(1)), LikelihoodError);
  CHECK_THROWS_AS(pll_gradient(d, Eigen::VectorXd::Zero(1)), LikelihoodError);
  CHECK_THROWS_AS(fit_cox(d), LikelihoodError);
}

TEST_CASE("huge linear predictors stay finite") {
  const auto d = design({{400}, {300}, {500}, {100}}, {1, 2, 2, 3}, {true, true, false, true});
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 3.0);
  const double value = log_partial_likelihood(d, beta);
  CHECK(std::isfinite(value));
  CHECK(pll_gradient(d, beta).allFinite());
  CHECK(pll_hessian(d, beta).allFinite());
  // Shift every x by -300: the partial likelihood is translation invariant.
  auto shifted = d;
  shifted.x.array() -= 300.0;
  CHECK(value == doctest::Approx(log_partial_likelihood(shifted, beta)).epsilon(1e-12));
}

TEST_CASE("evaluate_partial_likelihood agrees with the single-purpose functions") {
  std::mt19937_64 rng(4);
  const auto d = testing::random_design(rng, 40, 3);
  const Eigen::Vector3d beta(0.3, -0.7, 0.1);
  const auto all = evaluate_partial_likelihood(d, beta);
  CHECK(all.value == log_partial_likelihood(d, beta));
  CHECK((all.gradient - pll_gradient(d, beta)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((all.hessian - pll_hessian(d, beta)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((all.hessian - all.hessian.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient and Hessian match central finite differences") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = testing::random_design(rng, 50, 4);
    Eigen::VectorXd beta(4);
    for (auto& b : beta) b = normal(rng);
    const Eigen::VectorXd g = pll_gradient(d, beta);
    const Eigen::MatrixXd h = pll_hessian(d, beta);
    const double step = 1e-5;
    for (Eigen::Index k = 0; k < 4; ++k) {
      Eigen::VectorXd up = beta, down = beta;
      up[k] += step;
      down[k] -= step;
      const double fd = (log_partial_likelihood(d, up) - log_partial_likelihood(d, down)) / (2 * step);
      CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
      const Eigen::VectorXd fd_h = (pll_gradient(d, up) - pll_gradient(d, down)) / (2 * step);
      CHECK((fd_h - h.col(k)).cwiseAbs().maxCoeff() <= 1e-4 * std::max(1.0, h.col(k).cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("the Hessian is negative semidefinite at random points") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 2.0);
  const auto d = testing::random_design(rng, 60, 3);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd beta(3);
    for (auto& b : beta) b = normal(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pll_hessian(d, beta));
    CHECK(eig.eigenvalues().maxCoeff() <= 1e-8);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("fit: an unrelated covariate stays within three standard errors of zero") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 5; ++rep) {
    const auto d = shuffled_column_design(rng, 300);
    const CoxModel m = fit_cox(d);
    CHECK(std::abs(m.beta[0]) < 3 * m.standard_errors[0]);
  }
}

TEST_CASE("fit: never returns a worse point than the start, gradient vanishes") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = testing::random_design(rng, 80, 3);
    const CoxModel m = fit_cox(d);
    CHECK(m.diagnostics.log_likelihood >= m.diagnostics.initial_log_likelihood);
    CHECK(m.diagnostics.initial_log_likelihood == log_partial_likelihood(d, Eigen::VectorXd::Zero(3)));
    CHECK(pll_gradient(d, m.beta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(m.diagnostics.iterations >= 1);
    CHECK(m.beta.allFinite());
  }
}

TEST_CASE("fit: identical columns are rank deficient and named") {
  std::mt19937_64 rng(9);
  auto d = testing::random_design(rng, 50, 2);
  d.x.col(1) = d.x.col(0);
  try {
    fit_cox(d);
    FAIL("expected RankDeficiencyError");
  } catch (const RankDeficiencyError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("x1") != std::string::npos);
    CHECK(msg.find("x2") != std::string::npos);
  }
}

TEST_CASE("fit: the iteration cap raises a convergence error with diagnostics") {
  std::mt19937_64 rng(10);
  const auto d = testing::random_design(rng, 200, 3);
  FitOptions opt;
  opt.max_iterations = 1;
  try {
    fit_cox(d, opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("log partial likelihood") != std::string::npos);
  }
  opt.max_iterations = 0;
  CHECK_THROWS_AS(fit_cox(d, opt), ArgumentError);
}

TEST_CASE("fit: translation leaves coefficients and risk ranking unchanged") {
  std::mt19937_64 rng(31);
  const auto d = testing::random_design(rng, 150, 2);
  auto shifted = d;
  shifted.x.col(1).array() += 50.0;
  const CoxModel a = fit_cox(d), b = fit_cox(shifted);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(a.diagnostics.log_likelihood == doctest::Approx(b.diagnostics.log_likelihood).epsilon(1e-10));
  const Eigen::VectorXd ra = d.x * a.beta, rb = shifted.x * b.beta;
  for (Eigen::Index i = 0; i + 1 < ra.size(); ++i) CHECK((ra[i] < ra[i + 1]) == (rb[i] < rb[i + 1]));
  // The baseline absorbs the shift, so survival curves agree.
  for (Eigen::Index i = 0; i < 10; ++i) {
    const auto ca = survival_curve(a.baseline, ra[i]), cb = survival_curve(b.baseline, rb[i]);
    for (int t = 1; t <= 6; ++t) CHECK(std::abs(ca.at(t) - cb.at(t)) < 1e-8);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("baseline at beta = 0 with distinct times is 1/4, 1/3, 1/2, 1") {
  const auto d = design({{0.1}, {0.2}, {0.3}, {0.4}}, {1, 2, 3, 4}, {true, true, true, true});
  const auto table = baseline_hazard(d, Eigen::VectorXd::Zero(1));
  REQUIRE(table.steps.size() == 4);
  const double expected[] = {0.25, 1.0 / 3.0, 0.5, 1.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(table.steps[static_cast<std::size_t>(i)].semester == i + 1);
    CHECK(table.steps[static_cast<std::size_t>(i)].hazard == expected[i]);
  }
}

TEST_CASE("baseline with a tie counts d_i over the shared risk set") {
  const auto d = design({{0.1}, {0.2}, {0.3}, {0.4}}, {1, 1, 2, 2}, {true, true, true, false});
  const auto table = baseline_hazard(d, Eigen::VectorXd::Zero(1));
  REQUIRE(table.steps.size() == 2);
  CHECK(table.steps[0].semester == 1);
  CHECK(table.steps[0].hazard == 2.0 / 4.0);
  CHECK(table.steps[1].semester == 2);
  CHECK(table.steps[1].hazard == 1.0 / 2.0);
  CHECK(table.cumulative(0) == 0.0);
  CHECK(table.cumulative(1) == 0.5);
  CHECK(table.cumulative(9) == 1.0);
}

TEST_CASE("fitted baselines are positive and strictly increasing in time") {
  std::mt19937_64 rng(41);
  const auto d = testing::random_design(rng, 120, 2, 10);
  const CoxModel m = fit_cox(d);
  REQUIRE_FALSE(m.baseline.steps.empty());
  for (std::size_t i = 0; i < m.baseline.steps.size(); ++i) {
    CHECK(m.baseline.steps[i].hazard > 0.0);
    if (i) CHECK(m.baseline.steps[i].semester > m.baseline.steps[i - 1].semester);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("survival at a zero linear predictor is exp(-H0)") {
  BaselineHazardTable b{{{1, 0.25}, {3, 0.5}, {4, 0.1}}};
  const auto curve = survival_curve(b, 0.0);
  REQUIRE(curve.points.size() == 4);
  CHECK(curve.points[0].semester == 0);
  CHECK(curve.points[0].survival == 1.0);
  CHECK(curve.at(1) == std::exp(-0.25));
  CHECK(curve.at(2) == std::exp(-0.25));
  CHECK(curve.at(3) == std::exp(-0.75));
  CHECK(curve.at(4) == std::exp(-0.85));
}

TEST_CASE("a higher linear predictor lowers the curve pointwise") {
  BaselineHazardTable b{{{1, 0.25}, {2, 0.5}, {5, 0.2}}};
  const auto base = survival_curve(b, 0.0), high = survival_curve(b, 3.0);
  for (int t = 1; t <= 6; ++t) CHECK(high.at(t) < base.at(t));
}

TEST_CASE("increments 0.25 and 0.5 at linear predictor ln 2 give exp(-1.5)") {
  BaselineHazardTable b{{{1, 0.25}, {2, 0.5}}};
  const auto curve = survival_curve(b, std::log(2.0));
  CHECK(curve.at(2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-14));
  CHECK(curve.at(2) == doctest::Approx(0.22313).epsilon(1e-5));
}

TEST_CASE("predicted semester is the first crossing of the threshold") {
  SurvivalCurve c{{{0, 1.0}, {1, 0.9}, {2, 0.6}, {3, 0.45}}};
  CHECK(predict_dropout_semester(c) == SemesterPrediction{3, false});
  SurvivalCurve flat{{{0, 1.0}, {1, 0.9}, {2, 0.8}}};
  CHECK(predict_dropout_semester(flat, 0.5, 14) == SemesterPrediction{14, true});
  SurvivalCurve late{{{0, 1.0}, {2, 0.7}, {9, 0.3}}};
  CHECK(predict_dropout_semester(late, 0.5, 8) == SemesterPrediction{8, true});
  CHECK_THROWS_AS(predict_dropout_semester(c, 1.0, 14), ArgumentError);
  CHECK_THROWS_AS(predict_dropout_semester(c, 0.5, 0), ArgumentError);
}

TEST_CASE("threshold 0.999 picks the first event time of the table") {
  BaselineHazardTable b{{{2, 0.05}, {3, 0.4}, {6, 0.3}}};
  for (double lp : {-2.0, 0.0, 1.5}) CHECK(predict_dropout_semester(survival_curve(b, lp), 0.999, 14).semester == 2);
}

TEST_CASE("raw-covariate prediction goes through the stored encoding") {
  SyntheticConfig cfg;
  cfg.n_students = 600;
  cfg.baseline_hazard.assign(14, 0.25);
  cfg.effects = {{"hs_gpa", -0.6}, {"gender=M", 0.4}};
  cfg.censor_rate = 0.2;
  cfg.seed = 17;
  const Cohort c = generate_synthetic(cfg);
  const DesignMatrix d = encode(c, infer_encoding_spec(c, {{"gender", "hs_gpa"}, true}));
  const CoxModel m = fit_cox(d);
  CHECK(m.beta[0] > 0.0);
  CHECK(m.beta[1] < 0.0);
  for (std::size_t i = 0; i < 25; ++i) {
    const auto by_record = survival_curve(m, c.records[i].covariates);
    const auto by_row = survival_curve(m, Eigen::VectorXd(d.x.row(static_cast<Eigen::Index>(i)).transpose()));
    for (int t = 1; t <= 14; ++t) CHECK(std::abs(by_record.at(t) - by_row.at(t)) < 1e-12);
  }
  const Eigen::VectorXd raw = m.raw_coefficients();
  CHECK(raw[0] == m.beta[0]);
  CHECK(raw[1] == doctest::Approx(m.beta[1] / d.scaling[1]->sd));

  Covariates odd = c.records[0].covariates;
  odd.gender = "X";
  CHECK_THROWS_AS(survival_curve(m, odd), EncodingError);
  CHECK_THROWS_AS(survival_curve(m, Eigen::VectorXd::Zero(5)), ArgumentError);
}
