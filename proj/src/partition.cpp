#include <dropsurv/dataio.hpp>
#include <dropsurv/error.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace dropsurv {

std::pair<Cohort, Cohort> split_train_test(const Cohort& cohort, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ArgumentError("test fraction must lie in (0, 1)");
  if (cohort.records.empty()) throw ArgumentError("cannot split an empty cohort");

  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < cohort.records.size(); ++i) strata[cohort.records[i].event ? 0 : 1].push_back(i);

  // Total test size, kept off both extremes when possible, then shared across
  // strata by largest remainder.
  const std::size_t n = cohort.records.size();
  auto total = static_cast<std::size_t>(std::llround(test_fraction * double(n)));
  if (n >= 2) total = std::clamp<std::size_t>(total, 1, n - 1);
  std::size_t quota[2];
  double remainder[2];
  std::size_t assigned = 0;
  for (int s = 0; s < 2; ++s) {
    const double exact = double(total) * double(strata[s].size()) / double(n);
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    remainder[s] = exact - double(quota[s]);
    assigned += quota[s];
  }
  while (assigned < total) {
    const int s = remainder[0] >= remainder[1] ? 0 : 1;
    ++quota[s];
    remainder[s] = -1.0;
    ++assigned;
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> in_test(n, false);
  for (int s = 0; s < 2; ++s) {
    auto members = strata[s];
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < quota[s]; ++k) in_test[members[k]] = true;
  }

  std::pair<Cohort, Cohort> out;
  out.first.horizon = out.second.horizon = cohort.horizon;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? out.second : out.first).records.push_back(cohort.records[i]);
  return out;
}

}  // namespace dropsurv
