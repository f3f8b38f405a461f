#include <dropsurv/dataio.hpp>
#include <dropsurv/error.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace dropsurv {

namespace {

std::string indicator_name(const std::string& field, const std::string& level) { return field + "=" + level; }

/// Unpruned, unscaled columns in spec order.
struct RawColumns {
  std::vector<std::string> names;
  std::vector<bool> numeric;
};

RawColumns raw_columns(const EncodingSpec& spec) {
  RawColumns out;
  for (const auto& c : spec.categorical)
    for (const auto& level : c.levels) {
      if (level == c.reference) continue;
      out.names.push_back(indicator_name(c.field, level));
      out.numeric.push_back(false);
    }
  for (const auto& n : spec.numeric) {
    out.names.push_back(n.field);
    out.numeric.push_back(true);
  }
  return out;
}

/// Writes the unpruned, unscaled encoding of `x` into `out`.
void encode_raw(const EncodingSpec& spec, const Covariates& x, Eigen::Ref<Eigen::VectorXd> out) {
  Eigen::Index col = 0;
  for (const auto& c : spec.categorical) {
    const std::string& value = categorical_value(x, c.field);
    bool known = false;
    for (const auto& level : c.levels) {
      const bool hit = level == value;
      known = known || hit;
      if (level == c.reference) continue;
      out[col++] = hit ? 1.0 : 0.0;
    }
    if (!known) throw EncodingError("field '" + c.field + "': unseen level '" + value + "'");
  }
  for (const auto& n : spec.numeric) out[col++] = numeric_value(x, n.field);
}

}  // namespace

void EncodingSpec::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& c : categorical) {
    if (!is_categorical_field(c.field)) throw ConfigError("'" + c.field + "' is not a categorical field");
    if (!seen.insert(c.field).second) throw ConfigError("field '" + c.field + "' listed twice");
    std::unordered_set<std::string> levels;
    for (const auto& l : c.levels)
      if (!levels.insert(l).second) throw ConfigError("field '" + c.field + "': duplicate level '" + l + "'");
    if (!levels.contains(c.reference))
      throw ConfigError("field '" + c.field + "': reference level '" + c.reference + "' not in level list");
  }
  for (const auto& n : numeric) {
    if (!is_numeric_field(n.field)) throw ConfigError("'" + n.field + "' is not a numeric field");
    if (!seen.insert(n.field).second) throw ConfigError("field '" + n.field + "' listed twice");
  }
}

EncodingSpec infer_encoding_spec(std::span<const StudentRecord> records, const EncodingOptions& options) {
  auto wanted = [&](std::string_view field) {
    return options.fields.empty() ||
           std::find(options.fields.begin(), options.fields.end(), field) != options.fields.end();
  };
  for (const auto& f : options.fields)
    if (!is_categorical_field(f) && !is_numeric_field(f)) throw ConfigError("unknown field '" + f + "'");

  EncodingSpec spec;
  for (auto field : categorical_fields()) {
    if (!wanted(field)) continue;
    std::set<std::string> levels;
    for (const auto& r : records) levels.insert(categorical_value(r.covariates, field));
    if (levels.empty()) continue;
    CategoricalEncoding c{std::string(field), {levels.begin(), levels.end()}, {}};
    c.reference = c.levels.front();
    spec.categorical.push_back(std::move(c));
  }
  for (auto field : numeric_fields())
    if (wanted(field)) spec.numeric.push_back({std::string(field), options.standardize});
  return spec;
}

EncodingSpec infer_encoding_spec(const Cohort& cohort, const EncodingOptions& options) {
  return infer_encoding_spec(std::span<const StudentRecord>(cohort.records), options);
}

std::size_t DesignMatrix::event_count() const {
  return static_cast<std::size_t>(std::count(events.begin(), events.end(), true));
}

DesignMatrix make_design(Eigen::MatrixXd x, std::vector<int> times, std::vector<bool> events,
                         std::vector<std::string> column_names) {
  if (static_cast<std::size_t>(x.rows()) != times.size() || times.size() != events.size())
    throw ArgumentError("design matrix: x, times and events must have the same number of rows");
  if (column_names.empty())
    for (Eigen::Index j = 0; j < x.cols(); ++j) column_names.push_back("x" + std::to_string(j + 1));
  if (column_names.size() != static_cast<std::size_t>(x.cols()))
    throw ArgumentError("design matrix: column_names length differs from column count");
  if (!x.allFinite()) throw ArgumentError("design matrix: non-finite value");
  DesignMatrix d;
  d.scaling.assign(column_names.size(), std::nullopt);
  d.x = std::move(x);
  d.times = std::move(times);
  d.events = std::move(events);
  d.column_names = std::move(column_names);
  return d;
}

DesignMatrix encode(const Cohort& cohort, const EncodingSpec& spec) {
  spec.validate();
  const RawColumns raw = raw_columns(spec);
  const auto n = static_cast<Eigen::Index>(cohort.records.size());
  Eigen::MatrixXd full(n, static_cast<Eigen::Index>(raw.names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd row(full.cols());
    try {
      encode_raw(spec, cohort.records[i].covariates, row);
    } catch (const EncodingError& e) {
      throw EncodingError("record '" + cohort.records[i].student_id + "': " + e.what());
    }
    full.row(i) = row.transpose();
  }

  DesignMatrix d;
  d.spec = spec;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < full.cols(); ++j) {
    const bool constant = n == 0 || full.col(j).maxCoeff() == full.col(j).minCoeff();
    if (constant) {
      d.warnings.push_back("column '" + raw.names[j] + "' is constant and was dropped");
      continue;
    }
    keep.push_back(j);
  }
  if (keep.empty()) throw EncodingError("no informative columns remain after dropping constant columns");

  d.x.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::Index j = keep[k];
    d.column_names.push_back(raw.names[j]);
    const bool standardize = raw.numeric[j] && [&] {
      for (const auto& num : spec.numeric)
        if (num.field == raw.names[j]) return num.standardize;
      return false;
    }();
    if (!standardize) {
      d.x.col(k) = full.col(j);
      d.scaling.push_back(std::nullopt);
      continue;
    }
    const double mean = full.col(j).mean();
    const double sd = std::sqrt((full.col(j).array() - mean).square().sum() / double(n - 1));
    d.x.col(k) = (full.col(j).array() - mean) / sd;
    d.scaling.push_back(ColumnScaling{mean, sd});
  }

  d.times.reserve(cohort.records.size());
  d.events.reserve(cohort.records.size());
  for (const auto& r : cohort.records) {
    d.times.push_back(r.time_observed);
    d.events.push_back(r.event);
  }
  return d;
}

Encoder::Encoder(EncodingSpec spec, std::vector<std::string> columns,
                 std::vector<std::optional<ColumnScaling>> scaling)
    : spec_(std::move(spec)), columns_(std::move(columns)), scaling_(std::move(scaling)) {
  if (scaling_.size() != columns_.size()) throw ConfigError("encoder: scaling and column lists differ in length");
  if (spec_.categorical.empty() && spec_.numeric.empty()) return;
  const RawColumns raw = raw_columns(spec_);
  for (const auto& c : columns_)
    if (std::find(raw.names.begin(), raw.names.end(), c) == raw.names.end())
      throw ConfigError("encoder: column '" + c + "' is not produced by the encoding spec");
}

Encoder::Encoder(const DesignMatrix& design) : Encoder(design.spec, design.column_names, design.scaling) {}

Eigen::VectorXd Encoder::transform(const Covariates& x) const {
  if (spec_.categorical.empty() && spec_.numeric.empty())
    throw EncodingError("model carries no encoding spec; it only accepts encoded covariate vectors");
  const RawColumns raw = raw_columns(spec_);
  Eigen::VectorXd full(static_cast<Eigen::Index>(raw.names.size()));
  encode_raw(spec_, x, full);
  Eigen::VectorXd out(static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    const auto pos = std::find(raw.names.begin(), raw.names.end(), columns_[k]) - raw.names.begin();
    double v = full[pos];
    if (scaling_[k]) v = (v - scaling_[k]->mean) / scaling_[k]->sd;
    out[static_cast<Eigen::Index>(k)] = v;
  }
  return out;
}

DesignMatrix encode(const Cohort& cohort, const Encoder& encoder) {
  DesignMatrix d;
  d.spec = encoder.spec();
  d.column_names = encoder.columns();
  d.scaling = encoder.scaling();
  d.x.resize(static_cast<Eigen::Index>(cohort.records.size()), static_cast<Eigen::Index>(encoder.size()));
  for (std::size_t i = 0; i < cohort.records.size(); ++i) {
    const auto& r = cohort.records[i];
    try {
      d.x.row(static_cast<Eigen::Index>(i)) = encoder.transform(r.covariates).transpose();
    } catch (const EncodingError& e) {
      throw EncodingError("record '" + r.student_id + "': " + e.what());
    }
    d.times.push_back(r.time_observed);
    d.events.push_back(r.event);
  }
  return d;
}

double destandardize(const DesignMatrix& design, Eigen::Index row, Eigen::Index column) {
  const double v = design.x(row, column);
  const auto& s = design.scaling.at(static_cast<std::size_t>(column));
  return s ? v * s->sd + s->mean : v;
}

}  // namespace dropsurv
