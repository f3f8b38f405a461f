#include <dropsurv/dataio.hpp>
#include <dropsurv/error.hpp>

#include "csv.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace dropsurv {

// Covariate distributions of the generator:
//   categoricals      uniform over their level lists
//   incomes           log-normal, rounded to whole currency units
//   household_size    1 + Poisson(2.2)
//   hs_gpa            normal(3.0, 0.55) truncated to [0, 4], two decimals
//   test scores       normal(500, 100), rounded to integers
//   hs_grad_age       normal(18, 0.4), two decimals
//   admission_age     hs_grad_age + exponential(mean 0.6), two decimals

namespace {

struct LogNormal {
  double mu;
  double sigma;
};

constexpr LogNormal kStudentIncome{9.8, 0.7};
constexpr LogNormal kFatherIncome{10.6, 0.6};
constexpr LogNormal kMotherIncome{10.3, 0.6};
constexpr double kHouseholdPoissonMean = 2.2;
constexpr double kGpaMean = 3.0;
constexpr double kGpaSd = 0.55;
constexpr double kScoreMean = 500.0;
constexpr double kScoreSd = 100.0;
constexpr double kGradAgeMean = 18.0;
constexpr double kGradAgeSd = 0.4;
constexpr double kAdmissionDelayMean = 0.6;

const std::vector<std::pair<std::string, std::vector<std::string>>>& default_levels() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> levels{
      {"gender", {"F", "M"}},
      {"ethnicity", {"asian", "black", "hispanic", "other", "white"}},
      {"marital_status", {"divorced", "married", "single"}},
      {"residence_county", {"county_a", "county_b", "county_c", "county_d", "county_e", "county_f"}},
      {"college", {"arts", "business", "engineering", "sciences"}},
      {"major",
       {"accounting", "biology", "chemistry", "computer_science", "economics", "english", "history",
        "mechanical_engineering"}},
  };
  return levels;
}

ColumnScaling lognormal_moments(LogNormal d) {
  const double s2 = d.sigma * d.sigma;
  return {std::exp(d.mu + s2 / 2), std::sqrt(std::expm1(s2) * std::exp(2 * d.mu + s2))};
}

double normal_pdf(double z) { return std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

ColumnScaling truncated_normal_moments(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double z = normal_cdf(b) - normal_cdf(a);
  const double shift = (normal_pdf(a) - normal_pdf(b)) / z;
  const double var = sigma * sigma * (1 + (a * normal_pdf(a) - b * normal_pdf(b)) / z - shift * shift);
  return {mu + sigma * shift, std::sqrt(var)};
}

/// Nearest multiple of 1/per_unit, as the double closest to that decimal.
double round_to(double value, double per_unit) { return std::round(value * per_unit) / per_unit; }

}  // namespace

ColumnScaling population_moments(std::string_view field) {
  if (field == "student_income") return lognormal_moments(kStudentIncome);
  if (field == "father_income") return lognormal_moments(kFatherIncome);
  if (field == "mother_income") return lognormal_moments(kMotherIncome);
  if (field == "household_size") return {1 + kHouseholdPoissonMean, std::sqrt(kHouseholdPoissonMean)};
  if (field == "hs_gpa") return truncated_normal_moments(kGpaMean, kGpaSd, 0.0, 4.0);
  if (field == "reading_score" || field == "math_score" || field == "science_score") return {kScoreMean, kScoreSd};
  if (field == "hs_grad_age") return {kGradAgeMean, kGradAgeSd};
  if (field == "admission_age")
    return {kGradAgeMean + kAdmissionDelayMean,
            std::sqrt(kGradAgeSd * kGradAgeSd + kAdmissionDelayMean * kAdmissionDelayMean)};
  throw ConfigError("unknown numeric field '" + std::string(field) + "'");
}

Eigen::VectorXd SyntheticConfig::true_beta() const {
  Eigen::VectorXd beta(static_cast<Eigen::Index>(effects.size()));
  for (std::size_t k = 0; k < effects.size(); ++k) beta[static_cast<Eigen::Index>(k)] = effects[k].coefficient;
  return beta;
}

std::vector<std::string> SyntheticConfig::effect_columns() const {
  std::vector<std::string> out;
  for (const auto& e : effects) out.push_back(e.column);
  return out;
}

std::vector<std::string> SyntheticConfig::levels_for(std::string_view field) const {
  for (const auto& [name, values] : levels)
    if (name == field) return values;
  for (const auto& [name, values] : default_levels())
    if (name == field) return values;
  throw ConfigError("unknown categorical field '" + std::string(field) + "'");
}

void SyntheticConfig::validate() const {
  if (n_students < 1) throw ConfigError("n_students must be ≥ 1");
  if (horizon < 1) throw ConfigError("horizon must be ≥ 1");
  if (baseline_hazard.size() != static_cast<std::size_t>(horizon))
    throw ConfigError("baseline_hazard needs one value per semester 1.." + std::to_string(horizon) + ", got " +
                      std::to_string(baseline_hazard.size()));
  for (std::size_t t = 0; t < baseline_hazard.size(); ++t)
    if (!(baseline_hazard[t] > 0) || !std::isfinite(baseline_hazard[t]))
      throw ConfigError("baseline_hazard for semester " + std::to_string(t + 1) + " must be positive and finite");
  if (!(censor_rate >= 0 && censor_rate < 1)) throw ConfigError("censor_rate must lie in [0, 1)");
  for (const auto& [field, values] : levels) {
    if (!is_categorical_field(field)) throw ConfigError("levels: '" + field + "' is not a categorical field");
    if (values.empty()) throw ConfigError("levels: '" + field + "' has no levels");
    if (std::set<std::string>(values.begin(), values.end()).size() != values.size())
      throw ConfigError("levels: '" + field + "' has duplicate levels");
  }
  std::set<std::string> seen;
  for (const auto& e : effects) {
    if (!seen.insert(e.column).second) throw ConfigError("effect on '" + e.column + "' listed twice");
    if (!std::isfinite(e.coefficient)) throw ConfigError("effect on '" + e.column + "' is not finite");
    if (is_numeric_field(e.column)) continue;
    const auto eq = e.column.find('=');
    const std::string field = e.column.substr(0, eq);
    if (eq == std::string::npos || !is_categorical_field(field))
      throw ConfigError("effect column '" + e.column + "' is neither a numeric field nor field=level");
    const auto lv = levels_for(field);
    if (std::find(lv.begin(), lv.end(), e.column.substr(eq + 1)) == lv.end())
      throw ConfigError("effect column '" + e.column + "' names an unknown level");
  }
}

SyntheticConfig parse_synthetic_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("synthetic config: expected a key-value mapping");

  SyntheticConfig config;
  bool constant_hazard = false;
  double hazard_value = 0.0;
  try {
    for (const auto& item : root) {
      const auto key = item.first.as<std::string>();
      const YAML::Node& value = item.second;
      if (key == "n_students") {
        config.n_students = value.as<int>();
      } else if (key == "horizon") {
        config.horizon = value.as<int>();
      } else if (key == "seed") {
        config.seed = value.as<std::uint64_t>();
      } else if (key == "censor_rate") {
        config.censor_rate = value.as<double>();
      } else if (key == "baseline_hazard") {
        if (value.IsScalar()) {
          constant_hazard = true;
          hazard_value = value.as<double>();
        } else {
          config.baseline_hazard = value.as<std::vector<double>>();
        }
      } else if (key == "effects") {
        if (!value.IsMap()) throw ConfigError("synthetic config: 'effects' must map column names to coefficients");
        for (const auto& e : value) config.effects.push_back({e.first.as<std::string>(), e.second.as<double>()});
      } else if (key == "levels") {
        if (!value.IsMap()) throw ConfigError("synthetic config: 'levels' must map fields to level lists");
        for (const auto& l : value)
          config.levels.emplace_back(l.first.as<std::string>(), l.second.as<std::vector<std::string>>());
      } else {
        throw ConfigError("synthetic config: unknown key '" + key + "'");
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  if (constant_hazard) config.baseline_hazard.assign(static_cast<std::size_t>(std::max(config.horizon, 0)), hazard_value);
  config.validate();
  return config;
}

SyntheticConfig load_synthetic_config(const std::filesystem::path& path) {
  try {
    return parse_synthetic_config(csv::read_file(path.string()));
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

Cohort generate_synthetic(const SyntheticConfig& config) {
  config.validate();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gpa(kGpaMean, kGpaSd);
  std::normal_distribution<double> score(kScoreMean, kScoreSd);
  std::normal_distribution<double> grad_age(kGradAgeMean, kGradAgeSd);
  std::exponential_distribution<double> admission_delay(1.0 / kAdmissionDelayMean);
  std::poisson_distribution<int> household(kHouseholdPoissonMean);
  std::lognormal_distribution<double> student_income(kStudentIncome.mu, kStudentIncome.sigma);
  std::lognormal_distribution<double> father_income(kFatherIncome.mu, kFatherIncome.sigma);
  std::lognormal_distribution<double> mother_income(kMotherIncome.mu, kMotherIncome.sigma);
  std::uniform_int_distribution<int> censor_semester(1, config.horizon);

  std::vector<std::vector<std::string>> levels;
  for (auto field : categorical_fields()) levels.push_back(config.levels_for(field));

  // Pre-resolve effects into (numeric field | indicator) evaluators.
  struct Term {
    std::string field;
    std::string level;  // empty for numeric fields
    ColumnScaling moments;
    double coefficient;
  };
  std::vector<Term> terms;
  for (const auto& e : config.effects) {
    if (is_numeric_field(e.column)) {
      terms.push_back({e.column, {}, population_moments(e.column), e.coefficient});
    } else {
      const auto eq = e.column.find('=');
      terms.push_back({e.column.substr(0, eq), e.column.substr(eq + 1), {}, e.coefficient});
    }
  }

  const int width = static_cast<int>(std::to_string(config.n_students).size());
  Cohort cohort;
  cohort.horizon = config.horizon;
  cohort.records.reserve(static_cast<std::size_t>(config.n_students));

  for (int i = 0; i < config.n_students; ++i) {
    StudentRecord r;
    std::string id = std::to_string(i + 1);
    r.student_id = "S" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;

    Covariates& x = r.covariates;
    std::string* slots[] = {&x.gender, &x.ethnicity, &x.marital_status, &x.residence_county, &x.college, &x.major};
    for (std::size_t f = 0; f < levels.size(); ++f) {
      std::uniform_int_distribution<std::size_t> pick(0, levels[f].size() - 1);
      *slots[f] = levels[f][pick(rng)];
    }
    x.student_income = std::round(student_income(rng));
    x.father_income = std::round(father_income(rng));
    x.mother_income = std::round(mother_income(rng));
    x.household_size = 1 + household(rng);
    double g = gpa(rng);
    while (g < 0.0 || g > 4.0) g = gpa(rng);
    x.hs_gpa = round_to(g, 100);
    x.reading_score = std::round(score(rng));
    x.math_score = std::round(score(rng));
    x.science_score = std::round(score(rng));
    const double grad = grad_age(rng);
    x.hs_grad_age = round_to(grad, 100);
    x.admission_age = round_to(grad + admission_delay(rng), 100);

    double eta = 0.0;
    for (const auto& t : terms) {
      if (t.level.empty())
        eta += t.coefficient * (numeric_value(x, t.field) - t.moments.mean) / t.moments.sd;
      else if (categorical_value(x, t.field) == t.level)
        eta += t.coefficient;
    }
    const double risk = std::exp(eta);

    for (int t = 1; t <= config.horizon; ++t) {
      const double rate = config.baseline_hazard[static_cast<std::size_t>(t - 1)] * risk;
      if (!std::isfinite(rate) || !(-std::expm1(-rate) < 1.0))
        throw ConfigError("infeasible hazard: student " + r.student_id +
                          " reaches dropout probability 1 in semester " + std::to_string(t));
    }
    int dropout = config.horizon + 1;
    for (int t = 1; t <= config.horizon; ++t) {
      const double p = -std::expm1(-config.baseline_hazard[static_cast<std::size_t>(t - 1)] * risk);
      if (unit(rng) < p) {
        dropout = t;
        break;
      }
    }

    const bool draw_censor = unit(rng) < config.censor_rate;
    const int censor_at = draw_censor ? censor_semester(rng) : config.horizon + 1;
    if (censor_at < dropout && censor_at <= config.horizon) {
      r.time_observed = censor_at;
      r.event = false;
    } else if (dropout > config.horizon) {
      r.time_observed = config.horizon;
      r.event = false;
    } else {
      r.time_observed = dropout;
      r.event = true;
    }
    cohort.records.push_back(std::move(r));
  }
  return cohort;
}

}  // namespace dropsurv
