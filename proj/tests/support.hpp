#pragma once

#include <dropsurv/dataio.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline dropsurv::Covariates plain_covariates() {
  dropsurv::Covariates x;
  x.gender = "F";
  x.ethnicity = "white";
  x.marital_status = "single";
  x.residence_county = "county_a";
  x.student_income = 12000;
  x.father_income = 40000;
  x.mother_income = 30000;
  x.household_size = 3;
  x.hs_gpa = 3.1;
  x.reading_score = 520;
  x.math_score = 540;
  x.science_score = 500;
  x.hs_grad_age = 18.0;
  x.admission_age = 18.4;
  x.college = "arts";
  x.major = "history";
  return x;
}

inline dropsurv::StudentRecord record(std::string id, int time, bool event,
                                      dropsurv::Covariates x = plain_covariates()) {
  return {std::move(id), std::move(x), time, event};
}

inline std::string header() {
  std::string h;
  for (auto c : dropsurv::cohort_columns()) {
    if (!h.empty()) h += ',';
    h += c;
  }
  return h;
}

/// Default data row with selected cells replaced (column name -> text).
inline std::string row(const std::string& id, int time, int event,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::vector<std::pair<std::string, std::string>> cells{
      {"student_id", id},        {"gender", "F"},           {"ethnicity", "white"},    {"marital_status", "single"},
      {"residence_county", "county_a"}, {"student_income", "12000"}, {"father_income", "40000"},
      {"mother_income", "30000"}, {"household_size", "3"},  {"hs_gpa", "3.1"},          {"reading_score", "520"},
      {"math_score", "540"},     {"science_score", "500"},  {"hs_grad_age", "18"},     {"admission_age", "18.4"},
      {"college", "arts"},       {"major", "history"},      {"time_observed", std::to_string(time)},
      {"event", std::to_string(event)}};
  for (const auto& [k, v] : overrides)
    for (auto& c : cells)
      if (c.first == k) c.second = v;
  std::string out;
  for (const auto& c : cells) {
    if (!out.empty()) out += ',';
    out += c.second;
  }
  return out;
}

/// Random design: standard normal covariates, times on 1..max_time, each
/// subject an event with probability event_rate (at least one event forced).
inline dropsurv::DesignMatrix random_design(std::mt19937_64& rng, int n, int p, int max_time = 6,
                                            double event_rate = 0.7) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> time(1, max_time);
  std::bernoulli_distribution event(event_rate);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = normal(rng);
  std::vector<int> times(static_cast<std::size_t>(n));
  std::vector<bool> events(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    times[static_cast<std::size_t>(i)] = time(rng);
    events[static_cast<std::size_t>(i)] = event(rng);
  }
  events[0] = true;
  return dropsurv::make_design(std::move(x), std::move(times), std::move(events));
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("dropsurv-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace testing
