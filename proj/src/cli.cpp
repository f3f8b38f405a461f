#include <dropsurv/cli.hpp>
#include <dropsurv/eval.hpp>
#include <dropsurv/serialize.hpp>

#include "csv.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace dropsurv {

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::usage:
      return 1;
    case ErrorCategory::data:
      return 2;
    case ErrorCategory::numerical:
      return 3;
  }
  return 2;
}

namespace {

struct Options {
  std::string input;
  std::string output;
  std::string model;
  std::string model_kind = "cox";
  std::string test;
  std::string json;
  int k = 5;
  std::uint64_t seed = 1;
  double epsilon = 0.5;
  double cost = 1.0;
  double threshold = 0.5;
  int horizon = 14;
  std::optional<double> test_fraction;
};

std::string fmt(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ArgumentError("--threshold must lie in (0, 1)");
}

void check_horizon(int horizon) {
  if (horizon < 1) throw ArgumentError("--horizon must be ≥ 1");
}

// ---------------------------------------------------------------------------

int cmd_generate(const Options& o, bool seed_given, std::ostream& out) {
  SyntheticConfig config = load_synthetic_config(o.input);
  if (seed_given) config.seed = o.seed;
  const Cohort cohort = generate_synthetic(config);
  write_file_atomic(o.output, format_cohort_csv(cohort));

  std::vector<std::size_t> hist(static_cast<std::size_t>(cohort.horizon) + 1, 0);
  for (const auto& r : cohort.records)
    if (r.event) ++hist[static_cast<std::size_t>(r.time_observed)];
  const std::size_t events = cohort.event_count();
  const std::size_t peak = std::max<std::size_t>(1, *std::max_element(hist.begin(), hist.end()));

  out << "seed: " << config.seed << "\n";
  out << "students: " << cohort.size() << "\n";
  out << "dropouts observed: " << events << " (" << fmt(100.0 * double(events) / double(cohort.size()), 1)
      << "%), censored: " << cohort.size() - events << "\n";
  out << "dropouts by semester:\n";
  for (int t = 1; t <= cohort.horizon; ++t) {
    const std::size_t c = hist[static_cast<std::size_t>(t)];
    char line[32];
    std::snprintf(line, sizeof line, "  %3d %7zu ", t, c);
    out << line << std::string(c * 40 / peak, '#') << "\n";
  }
  out << "wrote " << o.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_train(const Options& o, std::ostream& out) {
  check_horizon(o.horizon);
  SvrOptions svr;
  svr.epsilon = o.epsilon;
  svr.cost = o.cost;
  svr.validate();

  const Cohort cohort = load_cohort(o.input, o.horizon);
  const DesignMatrix design = encode(cohort, infer_encoding_spec(cohort));
  for (const auto& w : cohort.warnings) out << "warning: " << w << "\n";
  for (const auto& w : design.warnings) out << "warning: " << w << "\n";
  out << "students: " << cohort.size() << ", dropouts observed: " << cohort.event_count()
      << ", columns: " << design.cols() << "\n";

  AnyModel model;
  if (o.model_kind == "cox") {
    CoxModel m = fit_cox(design);
    out << "model: cox\n";
    out << "iterations: " << m.diagnostics.iterations << "\n";
    out << "log partial likelihood: " << fmt(m.diagnostics.initial_log_likelihood, 4) << " -> "
        << fmt(m.diagnostics.log_likelihood, 4) << "\n";
    out << "gradient max-norm: " << m.diagnostics.gradient_max_norm << "\n";
    for (std::size_t j = 0; j < m.column_names().size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      char line[160];
      std::snprintf(line, sizeof line, "  %-36s % .5f  (se %.5f)\n", m.column_names()[j].c_str(), m.beta[jj],
                    m.standard_errors[jj]);
      out << line;
    }
    model = std::move(m);
  } else if (o.model_kind == "ols") {
    LinearModel m = fit_ols(design);
    out << "model: ols\n";
    out << "training rows (dropouts only): " << m.training_rows << "\n";
    out << "intercept: " << fmt(m.intercept, 5) << "\n";
    model = std::move(m);
  } else {
    SvrModel m = fit_svr(design, svr);
    out << "model: svr (epsilon " << m.epsilon << ", C " << m.cost << ")\n";
    out << "iterations: " << m.diagnostics.iterations << "\n";
    out << "primal/dual objective: " << fmt(m.diagnostics.primal_objective, 6) << " / "
        << fmt(m.diagnostics.dual_objective, 6) << " (relative gap " << m.diagnostics.relative_gap << ")\n";
    out << "support vectors: " << m.support_indices.size() << " of " << m.training_indices.size() << "\n";
    model = std::move(m);
  }
  save_model(model, o.output);
  out << "wrote " << o.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  check_threshold(o.threshold);
  check_horizon(o.horizon);
  const AnyModel model = load_model(o.model);
  const auto rows = load_applicants(o.input);
  const bool cox = std::holds_alternative<CoxModel>(model);

  std::ostringstream csv_out;
  csv_out << "student_id,predicted_semester,beyond_horizon";
  if (cox)
    for (int t = 1; t <= o.horizon; ++t) csv_out << ",S" << t;
  csv_out << ",error\n";

  std::size_t failed = 0;
  for (const auto& row : rows) {
    std::string error = row.error.value_or("");
    std::string body;
    if (error.empty()) {
      try {
        if (const auto* m = std::get_if<CoxModel>(&model)) {
          const SurvivalCurve curve = survival_curve(*m, row.covariates);
          const SemesterPrediction p = predict_dropout_semester(curve, o.threshold, o.horizon);
          body = std::to_string(p.semester) + "," + (p.beyond_horizon ? "true" : "false");
          for (int t = 1; t <= o.horizon; ++t) body += "," + csv::format_double(curve.at(t));
        } else if (const auto* m = std::get_if<LinearModel>(&model)) {
          body = csv::format_double(predict_linear(*m, row.covariates)) + ",";
        } else {
          body = csv::format_double(predict_svr(std::get<SvrModel>(model), row.covariates)) + ",";
        }
      } catch (const Error& e) {
        error = e.what();
      }
    }
    if (!error.empty()) {
      ++failed;
      err << "line " << row.line << " (" << (row.student_id.empty() ? "?" : row.student_id) << "): " << error
          << "\n";
      body = ",";
      if (cox) body += std::string(static_cast<std::size_t>(o.horizon), ',');
    }
    csv_out << csv::escape(row.student_id) << "," << body << "," << csv::escape(error) << "\n";
  }

  if (o.output.empty()) {
    out << csv_out.str();
  } else {
    write_file_atomic(o.output, csv_out.str());
    out << "predicted " << rows.size() - failed << " of " << rows.size() << " rows; wrote " << o.output << "\n";
  }
  return failed > 0 ? exit_code(ErrorCategory::data) : 0;
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const Options& o, std::ostream& out) {
  check_threshold(o.threshold);
  check_horizon(o.horizon);
  if (!o.test.empty() && o.test_fraction) throw ArgumentError("--test and --test-fraction are mutually exclusive");

  std::mt19937_64 master(o.seed);
  const std::uint64_t split_seed = master();
  const std::uint64_t fold_seed = master();

  Cohort train, test;
  Cohort input = load_cohort(o.input, o.horizon);
  if (!o.test.empty()) {
    train = std::move(input);
    test = load_cohort(o.test, o.horizon);
  } else {
    std::tie(train, test) = split_train_test(input, o.test_fraction.value_or(0.2), split_seed);
  }

  BenchmarkConfig config;
  config.k = o.k;
  config.seed = fold_seed;
  config.threshold = o.threshold;
  config.horizon = o.horizon;
  config.svr.epsilon = o.epsilon;
  config.svr.cost = o.cost;
  config.svr.validate();
  EvaluationReport report = run_benchmark(train, test, config);
  report.seed = o.seed;

  const std::string table = format_report_table(report);
  std::ostringstream header;
  header << "seed: " << o.seed << "\n"
         << "train: " << train.size() << " students (" << train.event_count() << " dropouts), test: " << test.size()
         << " students (" << test.event_count() << " dropouts)\n"
         << "metrics over dropouts observed in each held-out set\n\n";
  out << header.str() << table;
  if (!o.output.empty()) write_file_atomic(o.output, header.str() + table);
  if (!o.json.empty()) write_file_atomic(o.json, report_to_json(report).dump(2) + "\n");
  return 0;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predict the semester of student dropout with Cox regression, OLS and epsilon-SVR."};
  app.name("dropsurv");
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "Write a synthetic cohort CSV from a YAML config");
  generate->add_option("--input", o.input, "Synthetic cohort config (YAML)")->required();
  generate->add_option("--output", o.output, "Cohort CSV to write")->required();
  auto* seed_opt = generate->add_option("--seed", o.seed, "Override the config's seed");

  auto* train = app.add_subcommand("train", "Fit a model on a cohort CSV and save it as JSON");
  train->add_option("--input", o.input, "Cohort CSV")->required();
  train->add_option("--output", o.output, "Model JSON to write")->required();
  train->add_option("--model-kind", o.model_kind, "cox, ols or svr")
      ->check(CLI::IsMember({"cox", "ols", "svr"}))
      ->capture_default_str();
  train->add_option("--epsilon", o.epsilon, "SVR insensitivity width (semesters)")->capture_default_str();
  train->add_option("--cost", o.cost, "SVR penalty C")->capture_default_str();
  train->add_option("--horizon", o.horizon, "Observation horizon in semesters")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Predict dropout semesters for covariate-only rows");
  predict->add_option("--model", o.model, "Model JSON")->required();
  predict->add_option("--input", o.input, "Applicant CSV")->required();
  predict->add_option("--output", o.output, "Predictions CSV (stdout when omitted)");
  predict->add_option("--threshold", o.threshold, "Survival level that marks the predicted semester")
      ->capture_default_str();
  predict->add_option("--horizon", o.horizon, "Observation horizon in semesters")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate and test Regression, SVR and Cox");
  evaluate->add_option("--input", o.input, "Training cohort CSV (or the full cohort with --test-fraction)")
      ->required();
  evaluate->add_option("--test", o.test, "Held-out test cohort CSV");
  evaluate->add_option("--test-fraction", o.test_fraction, "Split --input, holding out this fraction (default 0.2)");
  evaluate->add_option("--k", o.k, "Number of CV folds")->capture_default_str();
  evaluate->add_option("--seed", o.seed, "Seed for the split and the folds")->capture_default_str();
  evaluate->add_option("--epsilon", o.epsilon, "SVR insensitivity width (semesters)")->capture_default_str();
  evaluate->add_option("--cost", o.cost, "SVR penalty C")->capture_default_str();
  evaluate->add_option("--threshold", o.threshold, "Survival level that marks the predicted semester")
      ->capture_default_str();
  evaluate->add_option("--horizon", o.horizon, "Observation horizon in semesters")->capture_default_str();
  evaluate->add_option("--output", o.output, "Write the text report here");
  evaluate->add_option("--json", o.json, "Write the JSON report here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorCategory::usage);
  }

  try {
    if (generate->parsed()) return cmd_generate(o, seed_opt->count() > 0, out);
    if (train->parsed()) return cmd_train(o, out);
    if (predict->parsed()) return cmd_predict(o, out, err);
    return cmd_evaluate(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorCategory::data);
  }
}

}  // namespace dropsurv
