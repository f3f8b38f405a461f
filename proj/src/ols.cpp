#include <dropsurv/baselines.hpp>
#include <dropsurv/error.hpp>

namespace dropsurv {

LinearModel fit_ols(const DesignMatrix& data, TargetPolicy policy) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    if (policy == TargetPolicy::all_rows || data.events[static_cast<std::size_t>(i)]) rows.push_back(i);

  const Eigen::Index p = data.cols();
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < p + 1)
    throw UnderdeterminedError("least squares is underdetermined: " + std::to_string(n) + " usable rows for " +
                               std::to_string(p + 1) + " coefficients");

  Eigen::MatrixXd a(n, p + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    a(k, 0) = 1.0;
    a.row(k).tail(p) = data.x.row(rows[static_cast<std::size_t>(k)]);
    y[k] = data.times[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < p + 1) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p + 1; ++k) {
      const Eigen::Index j = perm[k];
      if (!names.empty()) names += ", ";
      names += j == 0 ? std::string("(intercept)") : data.column_names[static_cast<std::size_t>(j - 1)];
    }
    throw RankDeficiencyError("least squares design is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                              std::to_string(p + 1) + "); dependent columns: " + names);
  }
  const Eigen::VectorXd coef = qr.solve(y);

  LinearModel model;
  model.intercept = coef[0];
  model.weights = coef.tail(p);
  model.encoder = Encoder(data);
  model.training_rows = rows.size();
  return model;
}

double predict_linear(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& encoded) {
  if (encoded.size() != model.weights.size()) throw ArgumentError("encoded covariate vector has the wrong length");
  return model.intercept + model.weights.dot(encoded);
}

double predict_linear(const LinearModel& model, const Covariates& x) {
  return predict_linear(model, model.encoder.transform(x));
}

}  // namespace dropsurv
