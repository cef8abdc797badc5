#ifndef TRIPLESCORE_TESTS_METRICS_TESTING_H_
#define TRIPLESCORE_TESTS_METRICS_TESTING_H_

#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triplescore/corpus.h"

namespace triplescore::testing {

// Enumerates every unordered pair of types and scores it directly.
inline std::optional<double> BruteForceTau(const std::vector<int>& pred,
                                           const std::vector<int>& truth) {
  const size_t n = truth.size();
  if (n < 2) return std::nullopt;
  double penalty = 0.0;
  int pairs = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      ++pairs;
      const int dp = (pred[i] > pred[j]) - (pred[i] < pred[j]);
      const int dt = (truth[i] > truth[j]) - (truth[i] < truth[j]);
      if (dp == 0 && dt == 0) continue;
      if (dp == 0 || dt == 0) {
        penalty += 0.5;
      } else if (dp != dt) {
        penalty += 1.0;
      }
    }
  }
  return penalty / pairs;
}

struct OracleReport {
  double accuracy = 0.0;
  double asd = 0.0;
  double tau = 0.0;
};

// Per-pair loop for accuracy and ASD, per-entity brute-force tau.
inline OracleReport BruteForceEvaluate(const std::vector<ScoredTriple>& truth,
                                       const std::map<std::pair<std::string, std::string>, int>& pred) {
  OracleReport r;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_entity;
  int within = 0;
  int total_diff = 0;
  for (const auto& t : truth) {
    const int p = pred.at({t.entity, t.type_name});
    within += std::abs(p - t.score) <= 2 ? 1 : 0;
    total_diff += std::abs(p - t.score);
    by_entity[t.entity].first.push_back(p);
    by_entity[t.entity].second.push_back(t.score);
  }
  r.accuracy = static_cast<double>(within) / static_cast<double>(truth.size());
  r.asd = static_cast<double>(total_diff) / static_cast<double>(truth.size());
  double tau_sum = 0.0;
  int scored = 0;
  for (const auto& [entity, lists] : by_entity) {
    if (const auto tau = BruteForceTau(lists.first, lists.second)) {
      tau_sum += *tau;
      ++scored;
    }
  }
  r.tau = scored > 0 ? tau_sum / scored : 0.0;
  return r;
}

}  // namespace triplescore::testing

#endif  // TRIPLESCORE_TESTS_METRICS_TESTING_H_
