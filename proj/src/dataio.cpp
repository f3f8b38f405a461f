#include <dropsurv/dataio.hpp>
#include <dropsurv/error.hpp>

#include "csv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace dropsurv {

namespace {

using namespace std::string_view_literals;

struct CategoricalAccessor {
  std::string_view name;
  std::string Covariates::*member;
};

struct NumericAccessor {
  std::string_view name;
  double (*get)(const Covariates&);
  void (*set)(Covariates&, double);
};

constexpr std::array<CategoricalAccessor, 6> kCategorical{{
    {"gender", &Covariates::gender},
    {"ethnicity", &Covariates::ethnicity},
    {"marital_status", &Covariates::marital_status},
    {"residence_county", &Covariates::residence_county},
    {"college", &Covariates::college},
    {"major", &Covariates::major},
}};

#define DROPSURV_NUMERIC(field)                                     \
  NumericAccessor {                                                 \
    #field, [](const Covariates& x) { return double(x.field); },    \
        [](Covariates& x, double v) { x.field = v; }                \
  }

const std::array<NumericAccessor, 10> kNumeric{{
    DROPSURV_NUMERIC(student_income),
    DROPSURV_NUMERIC(father_income),
    DROPSURV_NUMERIC(mother_income),
    {"household_size", [](const Covariates& x) { return double(x.household_size); },
     [](Covariates& x, double v) { x.household_size = static_cast<int>(v); }},
    DROPSURV_NUMERIC(hs_gpa),
    DROPSURV_NUMERIC(reading_score),
    DROPSURV_NUMERIC(math_score),
    DROPSURV_NUMERIC(science_score),
    DROPSURV_NUMERIC(hs_grad_age),
    DROPSURV_NUMERIC(admission_age),
}};

#undef DROPSURV_NUMERIC

constexpr std::array<std::string_view, 6> kCategoricalNames{
    "gender", "ethnicity", "marital_status", "residence_county", "college", "major"};

constexpr std::array<std::string_view, 10> kNumericNames{
    "student_income", "father_income", "mother_income", "household_size", "hs_gpa",
    "reading_score", "math_score", "science_score", "hs_grad_age", "admission_age"};

constexpr std::array<std::string_view, 19> kColumns{
    "student_id",     "gender",        "ethnicity",     "marital_status", "residence_county",
    "student_income", "father_income", "mother_income", "household_size", "hs_gpa",
    "reading_score",  "math_score",    "science_score", "hs_grad_age",    "admission_age",
    "college",        "major",         "time_observed", "event"};

const CategoricalAccessor* find_categorical(std::string_view name) {
  for (const auto& a : kCategorical)
    if (a.name == name) return &a;
  return nullptr;
}

const NumericAccessor* find_numeric(std::string_view name) {
  for (const auto& a : kNumeric)
    if (a.name == name) return &a;
  return nullptr;
}

std::string row_label(std::size_t row, std::size_t line) {
  return "row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
}

/// Header name -> column position; throws SchemaError naming the first missing column.
std::unordered_map<std::string, std::size_t> index_header(const csv::Row& header,
                                                          std::span<const std::string_view> required) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.cells.size(); ++i) {
    std::string name = header.cells[i];
    auto first = name.find_first_not_of(" \t");
    auto last = name.find_last_not_of(" \t");
    name = first == std::string::npos ? std::string() : name.substr(first, last - first + 1);
    if (!index.emplace(name, i).second) throw SchemaError("duplicate column '" + name + "' in header");
  }
  for (auto name : required)
    if (!index.contains(std::string(name))) throw SchemaError("missing column '" + std::string(name) + "'");
  return index;
}

/// Fills covariates from a data row; throws ValidationError with the row label.
void read_covariates(const csv::Row& row, std::size_t row_number,
                     const std::unordered_map<std::string, std::size_t>& index, Covariates& x) {
  auto cell = [&](std::string_view name) -> const std::string& {
    const std::size_t pos = index.at(std::string(name));
    static const std::string empty;
    const std::string& value = pos < row.cells.size() ? row.cells[pos] : empty;
    if (value.find_first_not_of(" \t") == std::string::npos)
      throw ValidationError(row_label(row_number, row.line) + ": missing value for '" + std::string(name) + "'");
    return value;
  };
  for (const auto& a : kCategorical) x.*a.member = cell(a.name);
  for (const auto& a : kNumeric) {
    const std::string& text = cell(a.name);
    double value = 0.0;
    if (!csv::parse_double(text, value))
      throw ValidationError(row_label(row_number, row.line) + ": cannot parse '" + text + "' in column '" +
                            std::string(a.name) + "'");
    if (a.name == "household_size" && value != std::floor(value))
      throw ValidationError(row_label(row_number, row.line) + ": household_size must be an integer, got '" + text +
                            "'");
    a.set(x, value);
  }
}

void check_covariates(const Covariates& x, const std::string& where, std::vector<std::string>* warnings) {
  auto fail = [&](const std::string& what) { throw ValidationError(where + ": " + what); };
  if (x.student_income < 0 || x.father_income < 0 || x.mother_income < 0) fail("incomes must be nonnegative");
  if (x.household_size < 1) fail("household_size must be ≥ 1");
  if (x.hs_gpa < 0 || x.hs_gpa > 4) fail("hs_gpa must lie in [0, 4]");
  if (x.hs_grad_age <= 0 || x.admission_age <= 0) fail("ages must be positive");
  if (warnings && x.admission_age < x.hs_grad_age - 1)
    warnings->push_back(where + ": admission_age " + csv::format_double(x.admission_age) +
                        " is more than a year below hs_grad_age " + csv::format_double(x.hs_grad_age));
}

}  // namespace

std::size_t Cohort::event_count() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](auto& r) { return r.event; }));
}

std::span<const std::string_view> categorical_fields() { return kCategoricalNames; }
std::span<const std::string_view> numeric_fields() { return kNumericNames; }
std::span<const std::string_view> cohort_columns() { return kColumns; }

bool is_categorical_field(std::string_view name) { return find_categorical(name) != nullptr; }
bool is_numeric_field(std::string_view name) { return find_numeric(name) != nullptr; }

const std::string& categorical_value(const Covariates& x, std::string_view field) {
  const auto* a = find_categorical(field);
  if (!a) throw ConfigError("unknown categorical field '" + std::string(field) + "'");
  return x.*a->member;
}

double numeric_value(const Covariates& x, std::string_view field) {
  const auto* a = find_numeric(field);
  if (!a) throw ConfigError("unknown numeric field '" + std::string(field) + "'");
  return a->get(x);
}

void validate(const Cohort& cohort) {
  if (cohort.horizon < 1) throw ValidationError("horizon must be ≥ 1");
  std::unordered_set<std::string_view> ids;
  for (std::size_t i = 0; i < cohort.records.size(); ++i) {
    const auto& r = cohort.records[i];
    const std::string where = "record " + std::to_string(i + 1) + " ('" + r.student_id + "')";
    if (r.student_id.empty()) throw ValidationError(where + ": empty student_id");
    if (!ids.insert(r.student_id).second) throw ValidationError("duplicate student_id '" + r.student_id + "'");
    if (r.time_observed < 1) throw ValidationError(where + ": violates time_observed ≥ 1");
    if (r.time_observed > cohort.horizon)
      throw ValidationError(where + ": time_observed " + std::to_string(r.time_observed) + " exceeds horizon " +
                            std::to_string(cohort.horizon));
    check_covariates(r.covariates, where, nullptr);
  }
}

Cohort parse_cohort(std::string_view csv_text, int horizon) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty()) throw SchemaError("empty cohort file: header row required");
  const auto index = index_header(rows.front(), kColumns);

  Cohort cohort;
  cohort.horizon = horizon;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = row_label(r, row.line);
    StudentRecord record;
    const std::size_t id_pos = index.at("student_id");
    record.student_id = id_pos < row.cells.size() ? row.cells[id_pos] : std::string();
    if (record.student_id.empty()) throw ValidationError(where + ": missing value for 'student_id'");
    read_covariates(row, r, index, record.covariates);

    auto int_cell = [&](const char* name) {
      const std::size_t pos = index.at(name);
      const std::string text = pos < row.cells.size() ? row.cells[pos] : std::string();
      long long value = 0;
      if (!csv::parse_int(text, value))
        throw ValidationError(where + ": cannot parse '" + text + "' in column '" + name + "'");
      return value;
    };
    const long long time = int_cell("time_observed");
    if (time < 1) throw ValidationError(where + ": violates time_observed ≥ 1");
    if (time > horizon)
      throw ValidationError(where + ": time_observed " + std::to_string(time) + " exceeds horizon " +
                            std::to_string(horizon));
    record.time_observed = static_cast<int>(time);
    const long long event = int_cell("event");
    if (event != 0 && event != 1) throw ValidationError(where + ": event must be 0 or 1");
    record.event = event == 1;

    check_covariates(record.covariates, where, &cohort.warnings);
    if (!ids.insert(record.student_id).second)
      throw ValidationError(where + ": duplicate student_id '" + record.student_id + "'");
    cohort.records.push_back(std::move(record));
  }
  return cohort;
}

Cohort load_cohort(const std::filesystem::path& path, int horizon) {
  if (horizon < 1) throw ArgumentError("horizon must be ≥ 1");
  return parse_cohort(csv::read_file(path.string()), horizon);
}

std::string format_cohort_csv(const Cohort& cohort) {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += '\n';
  for (const auto& r : cohort.records) {
    const auto& x = r.covariates;
    out += csv::escape(r.student_id);
    for (auto field : {"gender"sv, "ethnicity"sv, "marital_status"sv, "residence_county"sv}) {
      out += ',';
      out += csv::escape(categorical_value(x, field));
    }
    for (auto field : kNumericNames) {
      out += ',';
      out += csv::format_double(numeric_value(x, field));
    }
    out += ',';
    out += csv::escape(x.college);
    out += ',';
    out += csv::escape(x.major);
    out += ',';
    out += std::to_string(r.time_observed);
    out += r.event ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<ApplicantRow> parse_applicants(std::string_view csv_text) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty()) throw SchemaError("empty input file: header row required");
  std::vector<std::string_view> required{"student_id"};
  required.insert(required.end(), kColumns.begin() + 1, kColumns.begin() + 17);
  const auto index = index_header(rows.front(), required);

  std::vector<ApplicantRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ApplicantRow a;
    a.line = rows[r].line;
    const std::size_t id_pos = index.at("student_id");
    a.student_id = id_pos < rows[r].cells.size() ? rows[r].cells[id_pos] : std::string();
    try {
      read_covariates(rows[r], r, index, a.covariates);
      check_covariates(a.covariates, row_label(r, rows[r].line), nullptr);
    } catch (const Error& e) {
      a.error = e.what();
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<ApplicantRow> load_applicants(const std::filesystem::path& path) {
  return parse_applicants(csv::read_file(path.string()));
}

Cohort subset(const Cohort& cohort, std::span<const std::size_t> indices) {
  Cohort out;
  out.horizon = cohort.horizon;
  out.records.reserve(indices.size());
  for (auto i : indices) out.records.push_back(cohort.records.at(i));
  return out;
}

}  // namespace dropsurv
