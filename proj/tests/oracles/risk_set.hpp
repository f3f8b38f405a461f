#pragma once

// Direct enumeration of Breslow risk sets: every event i scans all subjects
// with t_j >= t_i and sums exp(beta . x_j) without any shifting.

#include <cmath>
#include <vector>

namespace oracle {

struct Subject {
  std::vector<double> x;
  int time = 1;
  bool event = false;
};

inline long double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<long double>(a[k]) * b[k];
  return s;
}

inline double log_partial_likelihood(const std::vector<Subject>& subjects, const std::vector<double>& beta) {
  long double total = 0;
  for (const auto& si : subjects) {
    if (!si.event) continue;
    long double denom = 0;
    for (const auto& sj : subjects)
      if (sj.time >= si.time) denom += std::exp(dot(beta, sj.x));
    total += dot(beta, si.x) - std::log(denom);
  }
  return static_cast<double>(total);
}

inline std::vector<double> gradient(const std::vector<Subject>& subjects, const std::vector<double>& beta) {
  std::vector<long double> g(beta.size(), 0);
  for (const auto& si : subjects) {
    if (!si.event) continue;
    long double denom = 0;
    std::vector<long double> num(beta.size(), 0);
    for (const auto& sj : subjects) {
      if (sj.time < si.time) continue;
      const long double w = std::exp(dot(beta, sj.x));
      denom += w;
      for (std::size_t k = 0; k < beta.size(); ++k) num[k] += w * sj.x[k];
    }
    for (std::size_t k = 0; k < beta.size(); ++k) g[k] += si.x[k] - num[k] / denom;
  }
  return {g.begin(), g.end()};
}

/// (d_i, |R(t_i)|) at each distinct event time, ascending.
struct RiskCount {
  int time;
  int events;
  int at_risk;
};

inline std::vector<RiskCount> risk_counts(const std::vector<Subject>& subjects) {
  std::vector<RiskCount> out;
  for (int t = 1; t <= 1000; ++t) {
    int d = 0, r = 0;
    for (const auto& s : subjects) {
      if (s.event && s.time == t) ++d;
      if (s.time >= t) ++r;
    }
    if (d > 0) out.push_back({t, d, r});
  }
  return out;
}

}  // namespace oracle
