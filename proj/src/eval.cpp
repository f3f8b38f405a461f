#include <dropsurv/error.hpp>
#include <dropsurv/eval.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace dropsurv {

double mae(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw ArgumentError("MAE of an empty prediction set");
  double total = 0.0;
  for (const auto& p : predictions) total += std::abs(p.predicted - p.actual);
  return total / double(predictions.size());
}

ErrorBalance error_balance(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw ArgumentError("UPER/OPER of an empty prediction set");
  ErrorBalance b;
  for (const auto& p : predictions) {
    if (p.predicted < p.actual)
      ++b.under;
    else if (p.predicted > p.actual)
      ++b.over;
    else
      ++b.exact;
  }
  if (b.under + b.over > 0) {
    b.uper = double(b.under) / double(b.under + b.over);
    b.oper = 1.0 - *b.uper;
  }
  return b;
}

std::optional<double> uper(std::span<const Prediction> predictions) { return error_balance(predictions).uper; }
std::optional<double> oper(std::span<const Prediction> predictions) { return error_balance(predictions).oper; }

PhaseMetrics score(std::span<const Prediction> predictions) {
  const ErrorBalance b = error_balance(predictions);
  PhaseMetrics m;
  m.mae = mae(predictions);
  m.uper = b.uper;
  m.oper = b.oper;
  m.under = b.under;
  m.over = b.over;
  m.exact = b.exact;
  m.evaluated = predictions.size();
  return m;
}

std::vector<std::vector<std::size_t>> stratified_kfold(const Cohort& cohort, int k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("k must be ≥ 2");
  std::vector<std::size_t> events, censored;
  for (std::size_t i = 0; i < cohort.records.size(); ++i) (cohort.records[i].event ? events : censored).push_back(i);
  const auto kk = static_cast<std::size_t>(k);
  if (events.size() < kk)
    throw ArgumentError("stratum 'event' has " + std::to_string(events.size()) + " members, fewer than k=" +
                        std::to_string(k));
  if (!censored.empty() && censored.size() < kk)
    throw ArgumentError("stratum 'censored' has " + std::to_string(censored.size()) + " members, fewer than k=" +
                        std::to_string(k));

  std::mt19937_64 rng(seed);
  std::shuffle(events.begin(), events.end(), rng);
  std::shuffle(censored.begin(), censored.end(), rng);

  std::vector<std::vector<std::size_t>> folds(kk);
  std::size_t next = 0;
  for (auto i : events) folds[next++ % kk].push_back(i);
  for (auto i : censored) folds[next++ % kk].push_back(i);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::regression:
      return "Regression";
    case ModelKind::svr:
      return "SVR";
    case ModelKind::cox:
      return "Cox";
  }
  return "?";
}

namespace {

/// Fits `kind` on `train_design` and predicts the event rows of `test_design`.
PredictionSet fit_and_predict(ModelKind kind, const DesignMatrix& train_design, const DesignMatrix& test_design,
                              const BenchmarkConfig& config, int horizon) {
  PredictionSet out;
  auto emit = [&](Eigen::Index i, double predicted) {
    if (config.round_predictions) predicted = std::round(predicted);
    out.push_back({predicted, test_design.times[static_cast<std::size_t>(i)]});
  };
  switch (kind) {
    case ModelKind::regression: {
      const LinearModel m = fit_ols(train_design);
      for (Eigen::Index i = 0; i < test_design.rows(); ++i)
        if (test_design.events[static_cast<std::size_t>(i)])
          emit(i, predict_linear(m, test_design.x.row(i).transpose()));
      break;
    }
    case ModelKind::svr: {
      const SvrModel m = fit_svr(train_design, config.svr);
      for (Eigen::Index i = 0; i < test_design.rows(); ++i)
        if (test_design.events[static_cast<std::size_t>(i)])
          emit(i, predict_svr(m, test_design.x.row(i).transpose()));
      break;
    }
    case ModelKind::cox: {
      const CoxModel m = fit_cox(train_design, config.cox);
      for (Eigen::Index i = 0; i < test_design.rows(); ++i)
        if (test_design.events[static_cast<std::size_t>(i)]) {
          const auto curve = survival_curve(m, test_design.x.row(i).transpose());
          emit(i, predict_dropout_semester(curve, config.threshold, horizon).semester);
        }
      break;
    }
  }
  return out;
}

PhaseMetrics average(const std::vector<PhaseMetrics>& folds) {
  PhaseMetrics m;
  double uper_total = 0.0;
  std::size_t defined = 0;
  for (const auto& f : folds) {
    m.mae += f.mae;
    m.under += f.under;
    m.over += f.over;
    m.exact += f.exact;
    m.evaluated += f.evaluated;
    if (f.uper) {
      uper_total += *f.uper;
      ++defined;
    }
  }
  m.mae /= double(folds.size());
  if (defined > 0) {
    m.uper = uper_total / double(defined);
    m.oper = 1.0 - *m.uper;
  }
  return m;
}

}  // namespace

EvaluationReport run_benchmark(const Cohort& train, const Cohort& test, const BenchmarkConfig& config) {
  {
    std::vector<std::string_view> ids;
    for (const auto& r : train.records) ids.push_back(r.student_id);
    std::sort(ids.begin(), ids.end());
    for (const auto& r : test.records)
      if (std::binary_search(ids.begin(), ids.end(), std::string_view(r.student_id)))
        throw ArgumentError("train and test cohorts share student '" + r.student_id + "'");
  }
  if (test.event_count() == 0) throw ArgumentError("test cohort has no event-observed students to evaluate");
  const int horizon = config.horizon > 0 ? config.horizon : train.horizon;

  EncodingSpec spec;
  if (config.encoding) {
    spec = *config.encoding;
  } else {
    std::vector<StudentRecord> all = train.records;
    all.insert(all.end(), test.records.begin(), test.records.end());
    spec = infer_encoding_spec(std::span<const StudentRecord>(all));
  }

  const auto folds = stratified_kfold(train, config.k, config.seed);

  EvaluationReport report;
  report.k = config.k;
  report.seed = config.seed;
  report.train_size = train.size();
  report.test_size = test.size();
  for (auto kind : config.models) report.models.push_back({kind, {}, {}, {}});

  auto context = [](ModelKind kind, const std::string& phase, const Error& e) {
    return Error(e.category(), std::string(model_name(kind)) + " (" + phase + "): " + e.what());
  };

  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(train.size(), false);
    for (auto i : folds[f]) held[i] = true;
    std::vector<std::size_t> fit_rows;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (!held[i]) fit_rows.push_back(i);
    const Cohort fold_train = subset(train, fit_rows);
    const Cohort fold_test = subset(train, folds[f]);
    const std::string phase = "fold " + std::to_string(f + 1) + "/" + std::to_string(folds.size());

    DesignMatrix train_design, test_design;
    try {
      train_design = encode(fold_train, spec);
      test_design = encode(fold_test, Encoder(train_design));
    } catch (const Error& e) {
      throw Error(e.category(), "encoding (" + phase + "): " + e.what());
    }
    if (test_design.event_count() == 0) throw ArgumentError(phase + " has no event-observed students");

    for (auto& m : report.models) {
      try {
        m.folds.push_back(score(fit_and_predict(m.kind, train_design, test_design, config, horizon)));
      } catch (const Error& e) {
        throw context(m.kind, phase, e);
      }
    }
  }

  DesignMatrix train_design, test_design;
  try {
    train_design = encode(train, spec);
    test_design = encode(test, Encoder(train_design));
  } catch (const Error& e) {
    throw Error(e.category(), std::string("encoding (test): ") + e.what());
  }
  for (auto& m : report.models) {
    m.cv = average(m.folds);
    try {
      m.test = score(fit_and_predict(m.kind, train_design, test_design, config, horizon));
    } catch (const Error& e) {
      throw context(m.kind, "test", e);
    }
  }
  return report;
}

namespace {

std::string fixed(std::optional<double> v, int precision = 3) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

nlohmann::json metrics_json(const PhaseMetrics& m) {
  nlohmann::json j;
  j["mae"] = m.mae;
  j["uper"] = m.uper ? nlohmann::json(*m.uper) : nlohmann::json(nullptr);
  j["oper"] = m.oper ? nlohmann::json(*m.oper) : nlohmann::json(nullptr);
  j["under"] = m.under;
  j["over"] = m.over;
  j["exact"] = m.exact;
  j["evaluated"] = m.evaluated;
  return j;
}

}  // namespace

std::string format_report_table(const EvaluationReport& report) {
  const std::string cv_title = std::to_string(report.k) + "-fold CV";
  constexpr std::size_t name_w = 12, cell_w = 8;
  const std::size_t group_w = 3 * cell_w + 1;
  auto centered = [&](const std::string& s) {
    const std::size_t left = (group_w - std::min(group_w, s.size())) / 2;
    return pad_right(std::string(left, ' ') + s, group_w);
  };

  std::string out;
  out += pad_right("", name_w) + "|" + centered(cv_title) + "|" + centered("Test") + "\n";
  std::string header = pad_right("Model", name_w) + "|";
  for (int g = 0; g < 2; ++g) {
    for (const char* h : {"MAE", "UPER", "OPER"}) header += pad_left(h, cell_w);
    header += g == 0 ? " |" : " ";
  }
  out += header + "\n";
  out += std::string(name_w, '-') + "+" + std::string(group_w, '-') + "+" + std::string(group_w, '-') + "\n";
  for (const auto& m : report.models) {
    std::string line = pad_right(std::string(model_name(m.kind)), name_w) + "|";
    for (const PhaseMetrics* p : {&m.cv, &m.test}) {
      line += pad_left(fixed(p->mae, 3), cell_w) + pad_left(fixed(p->uper), cell_w) + pad_left(fixed(p->oper), cell_w);
      line += p == &m.cv ? " |" : " ";
    }
    out += line + "\n";
  }
  return out;
}

nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["k"] = report.k;
  j["seed"] = report.seed;
  j["train_size"] = report.train_size;
  j["test_size"] = report.test_size;
  j["models"] = nlohmann::json::array();
  for (const auto& m : report.models) {
    nlohmann::json mj;
    mj["model"] = std::string(model_name(m.kind));
    mj["cv"] = metrics_json(m.cv);
    mj["cv"]["folds"] = nlohmann::json::array();
    for (const auto& f : m.folds) mj["cv"]["folds"].push_back(metrics_json(f));
    mj["test"] = metrics_json(m.test);
    j["models"].push_back(std::move(mj));
  }
  return j;
}

}  // namespace dropsurv
