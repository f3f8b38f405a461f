#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dropsurv {

/// The 16 pre-enrollment attributes of one student.
struct Covariates {
  std::string gender;
  std::string ethnicity;
  std::string marital_status;
  std::string residence_county;
  double student_income = 0.0;
  double father_income = 0.0;
  double mother_income = 0.0;
  int household_size = 1;
  double hs_gpa = 0.0;
  double reading_score = 0.0;
  double math_score = 0.0;
  double science_score = 0.0;
  double hs_grad_age = 0.0;
  double admission_age = 0.0;
  std::string college;
  std::string major;

  bool operator==(const Covariates&) const = default;
};

/// One student: covariates plus the observed semester count. `event` is true when
/// dropout was observed at `time_observed`, false when right-censored there.
struct StudentRecord {
  std::string student_id;
  Covariates covariates;
  int time_observed = 1;
  bool event = false;

  bool operator==(const StudentRecord&) const = default;
};

struct Cohort {
  std::vector<StudentRecord> records;
  int horizon = 14;
  /// Non-fatal findings from ingestion, e.g. implausible admission ages.
  std::vector<std::string> warnings;

  std::size_t size() const { return records.size(); }
  std::size_t event_count() const;
};

// Field registry. Names match the CSV header.
std::span<const std::string_view> categorical_fields();
std::span<const std::string_view> numeric_fields();
bool is_categorical_field(std::string_view name);
bool is_numeric_field(std::string_view name);
const std::string& categorical_value(const Covariates& x, std::string_view field);
double numeric_value(const Covariates& x, std::string_view field);

/// Full CSV header, in column order.
std::span<const std::string_view> cohort_columns();

/// Throws ValidationError when a record or the cohort breaks an invariant
/// (time_observed in [1, horizon], unique ids, nonnegative incomes, ...).
void validate(const Cohort& cohort);

Cohort load_cohort(const std::filesystem::path& path, int horizon);
Cohort parse_cohort(std::string_view csv_text, int horizon);
std::string format_cohort_csv(const Cohort& cohort);

/// A covariate-only row as read for prediction; `error` is set instead of
/// throwing so one bad row does not stop the others.
struct ApplicantRow {
  std::size_t line = 0;
  std::string student_id;
  Covariates covariates;
  std::optional<std::string> error;
};

/// Reads rows carrying at least `student_id` and the 16 covariate columns;
/// `time_observed`/`event` are ignored when present.
std::vector<ApplicantRow> load_applicants(const std::filesystem::path& path);
std::vector<ApplicantRow> parse_applicants(std::string_view csv_text);

// ---------------------------------------------------------------------------
// Encoding

struct CategoricalEncoding {
  std::string field;
  std::vector<std::string> levels;
  std::string reference;

  bool operator==(const CategoricalEncoding&) const = default;
};

struct NumericEncoding {
  std::string field;
  bool standardize = true;

  bool operator==(const NumericEncoding&) const = default;
};

/// Which fields become columns and how. Fields absent from the spec are not encoded.
struct EncodingSpec {
  std::vector<CategoricalEncoding> categorical;
  std::vector<NumericEncoding> numeric;

  /// Throws ConfigError on unknown fields, duplicate levels, or a reference
  /// level missing from its list.
  void validate() const;

  bool operator==(const EncodingSpec&) const = default;
};

struct EncodingOptions {
  /// Fields to encode; empty means all 16.
  std::vector<std::string> fields;
  bool standardize = true;
};

/// Level lists are the sorted distinct values seen in `records`; the first
/// level is the reference.
EncodingSpec infer_encoding_spec(std::span<const StudentRecord> records, const EncodingOptions& options = {});
EncodingSpec infer_encoding_spec(const Cohort& cohort, const EncodingOptions& options = {});

struct ColumnScaling {
  double mean = 0.0;
  double sd = 1.0;

  bool operator==(const ColumnScaling&) const = default;
};

struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<int> times;
  std::vector<bool> events;
  std::vector<std::string> column_names;
  /// Set for standardized columns: stored value = (raw - mean) / sd.
  std::vector<std::optional<ColumnScaling>> scaling;
  EncodingSpec spec;
  std::vector<std::string> warnings;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
  std::size_t event_count() const;
};

/// Builds a design matrix without an encoding spec (tests, bindings). All
/// columns unscaled; names default to x1..xp.
DesignMatrix make_design(Eigen::MatrixXd x, std::vector<int> times, std::vector<bool> events,
                         std::vector<std::string> column_names = {});

/// The fitted column layout of a design matrix: maps raw covariates to the
/// same columns, with the same scaling, that a model was trained on.
class Encoder {
 public:
  Encoder() = default;
  Encoder(EncodingSpec spec, std::vector<std::string> columns, std::vector<std::optional<ColumnScaling>> scaling);
  explicit Encoder(const DesignMatrix& design);

  const EncodingSpec& spec() const { return spec_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::optional<ColumnScaling>>& scaling() const { return scaling_; }
  std::size_t size() const { return columns_.size(); }

  /// Throws EncodingError on a categorical value outside the level list.
  Eigen::VectorXd transform(const Covariates& x) const;

  bool operator==(const Encoder&) const = default;

 private:
  EncodingSpec spec_;
  std::vector<std::string> columns_;
  std::vector<std::optional<ColumnScaling>> scaling_;
};

/// One-hot categoricals (reference level dropped), pass numerics through,
/// prune constant columns with a warning, then standardize flagged numerics.
DesignMatrix encode(const Cohort& cohort, const EncodingSpec& spec);

/// Applies an already-fitted layout; no pruning, no re-estimated scaling.
DesignMatrix encode(const Cohort& cohort, const Encoder& encoder);

/// Raw-unit value of column `column` for row `row`.
double destandardize(const DesignMatrix& design, Eigen::Index row, Eigen::Index column);

// ---------------------------------------------------------------------------
// Synthetic cohorts

/// True coefficient on an encoded column. Numeric fields enter as z-scores
/// against the generating distribution's population moments; `field=level`
/// names an indicator.
struct CovariateEffect {
  std::string column;
  double coefficient = 0.0;
};

struct SyntheticConfig {
  int n_students = 5000;
  int horizon = 14;
  std::vector<CovariateEffect> effects;
  /// h0(t) for t = 1..horizon.
  std::vector<double> baseline_hazard;
  double censor_rate = 0.0;
  std::uint64_t seed = 0;
  /// Optional overrides of the built-in categorical level lists.
  std::vector<std::pair<std::string, std::vector<std::string>>> levels;

  Eigen::VectorXd true_beta() const;
  std::vector<std::string> effect_columns() const;
  /// Level list used for `field`, honoring overrides.
  std::vector<std::string> levels_for(std::string_view field) const;
  void validate() const;
};

SyntheticConfig load_synthetic_config(const std::filesystem::path& path);
SyntheticConfig parse_synthetic_config(std::string_view yaml_text);

/// Population (mean, sd) of a numeric field under the generator's distributions.
ColumnScaling population_moments(std::string_view field);

/// Deterministic for a given seed. Dropout semester follows the discrete-time
/// hazard 1 - exp(-h0(t) exp(beta x)); a censor_rate fraction draws an
/// independent censoring semester uniform on 1..horizon and is censored there
/// when it precedes dropout; survivors past the horizon are censored at it.
Cohort generate_synthetic(const SyntheticConfig& config);

// ---------------------------------------------------------------------------
// Partitioning

/// Stratified on the event indicator; order within each side follows the input.
std::pair<Cohort, Cohort> split_train_test(const Cohort& cohort, double test_fraction, std::uint64_t seed);

Cohort subset(const Cohort& cohort, std::span<const std::size_t> indices);

}  // namespace dropsurv
