#pragma once

#include <dropsurv/baselines.hpp>
#include <dropsurv/cox.hpp>
#include <dropsurv/dataio.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dropsurv {

struct Prediction {
  double predicted = 0.0;
  int actual = 1;
};

using PredictionSet = std::vector<Prediction>;

/// Mean absolute error. Throws ArgumentError on an empty set.
double mae(std::span<const Prediction> predictions);

/// Under/over/exact counts and the rates derived from them. The rates are
/// unset (the undefined marker) when every prediction is exact.
struct ErrorBalance {
  std::size_t under = 0;
  std::size_t over = 0;
  std::size_t exact = 0;
  std::optional<double> uper;
  std::optional<double> oper;

  bool defined() const { return uper.has_value(); }
};

ErrorBalance error_balance(std::span<const Prediction> predictions);
std::optional<double> uper(std::span<const Prediction> predictions);
std::optional<double> oper(std::span<const Prediction> predictions);

/// k folds of cohort indices, stratified on the event indicator: each stratum
/// is shuffled and dealt round-robin, the censored deal continuing where the
/// event deal stopped.
std::vector<std::vector<std::size_t>> stratified_kfold(const Cohort& cohort, int k, std::uint64_t seed);

enum class ModelKind { regression, svr, cox };

std::string_view model_name(ModelKind kind);  // "Regression", "SVR", "Cox"

struct BenchmarkConfig {
  int k = 5;
  std::uint64_t seed = 0;
  FitOptions cox;
  double threshold = 0.5;
  /// Horizon for Cox predictions; 0 means the training cohort's horizon.
  int horizon = 0;
  SvrOptions svr;
  bool round_predictions = false;
  /// Encoding applied to every fit; inferred from train and test when unset.
  std::optional<EncodingSpec> encoding;
  std::vector<ModelKind> models{ModelKind::regression, ModelKind::svr, ModelKind::cox};
};

struct PhaseMetrics {
  double mae = 0.0;
  std::optional<double> uper;
  std::optional<double> oper;
  std::size_t under = 0;
  std::size_t over = 0;
  std::size_t exact = 0;
  std::size_t evaluated = 0;
};

struct ModelReport {
  ModelKind kind = ModelKind::cox;
  /// Unweighted mean over folds; uper is the mean over folds where it is
  /// defined and oper = 1 - uper. Counts are summed over folds.
  PhaseMetrics cv;
  std::vector<PhaseMetrics> folds;
  PhaseMetrics test;
};

struct EvaluationReport {
  int k = 5;
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<ModelReport> models;
};

/// MAE plus error balance of one prediction set.
PhaseMetrics score(std::span<const Prediction> predictions);

/// k-fold CV on `train` (identical folds for every model) and a held-out test
/// on `test`; metrics use event-observed subjects only. Fitting errors are
/// rethrown with model and fold context.
EvaluationReport run_benchmark(const Cohort& train, const Cohort& test, const BenchmarkConfig& config);

/// Aligned text table: one row per model, CV and Test column groups.
std::string format_report_table(const EvaluationReport& report);
nlohmann::json report_to_json(const EvaluationReport& report);

}  // namespace dropsurv
