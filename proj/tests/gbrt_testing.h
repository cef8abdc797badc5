#ifndef TRIPLESCORE_TESTS_GBRT_TESTING_H_
#define TRIPLESCORE_TESTS_GBRT_TESTING_H_

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>
#include <vector>

#include "test_util.h"
#include "triplescore/gbrt.h"

namespace triplescore::testing {

struct OracleSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double reduction = 0.0;
};

inline double Sse(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double total = 0.0;
  for (const double v : values) total += (v - mean) * (v - mean);
  return total;
}

// Exhaustive split search: every feature, every midpoint between distinct
// observed values, error reduction recomputed from scratch. Reductions within
// a relative 1e-12 of the best are ties, broken by (feature, threshold).
inline OracleSplit BruteForceSplit(const std::vector<std::vector<double>>& x,
                                   const std::vector<double>& y,
                                   const std::vector<size_t>& rows, int min_leaf) {
  std::vector<double> all;
  for (const size_t r : rows) all.push_back(y[r]);
  const double parent = Sse(all);
  struct Candidate {
    int feature;
    double threshold;
    double reduction;
  };
  std::vector<Candidate> candidates;
  for (size_t f = 0; f < x[0].size(); ++f) {
    std::set<double> distinct;
    for (const size_t r : rows) distinct.insert(x[r][f]);
    std::vector<double> values(distinct.begin(), distinct.end());
    for (size_t i = 0; i + 1 < values.size(); ++i) {
      const double threshold = (values[i] + values[i + 1]) / 2.0;
      std::vector<double> left;
      std::vector<double> right;
      for (const size_t r : rows) (x[r][f] <= threshold ? left : right).push_back(y[r]);
      if (static_cast<int>(left.size()) < min_leaf ||
          static_cast<int>(right.size()) < min_leaf) {
        continue;
      }
      candidates.push_back(
          {static_cast<int>(f), threshold, parent - Sse(left) - Sse(right)});
    }
  }
  OracleSplit best;
  double top = 0.0;
  for (const auto& c : candidates) top = std::max(top, c.reduction);
  const double tolerance = 1e-12 * std::max(1.0, top);
  if (top <= tolerance) return best;
  for (const auto& c : candidates) {
    if (c.reduction >= top - tolerance) {
      best = {true, c.feature, c.threshold, c.reduction};
      break;
    }
  }
  return best;
}

// Pointer-based reference tree built with BruteForceSplit.
struct OracleNode {
  double value = 0.0;
  int feature = -1;
  double threshold = 0.0;
  std::unique_ptr<OracleNode> left;
  std::unique_ptr<OracleNode> right;

  double Predict(const std::vector<double>& row) const {
    if (feature < 0) return value;
    return row[feature] <= threshold ? left->Predict(row) : right->Predict(row);
  }
};

inline std::unique_ptr<OracleNode> OracleTree(const std::vector<std::vector<double>>& x,
                                              const std::vector<double>& y,
                                              const std::vector<size_t>& rows, int depth,
                                              int max_depth, int min_leaf) {
  auto node = std::make_unique<OracleNode>();
  double sum = 0.0;
  for (const size_t r : rows) sum += y[r];
  node->value = sum / static_cast<double>(rows.size());
  if (depth >= max_depth) return node;
  const OracleSplit split = BruteForceSplit(x, y, rows, min_leaf);
  if (!split.found) return node;
  std::vector<size_t> left;
  std::vector<size_t> right;
  for (const size_t r : rows) (x[r][split.feature] <= split.threshold ? left : right).push_back(r);
  node->feature = split.feature;
  node->threshold = split.threshold;
  node->left = OracleTree(x, y, left, depth + 1, max_depth, min_leaf);
  node->right = OracleTree(x, y, right, depth + 1, max_depth, min_leaf);
  return node;
}

// Naive least-squares boosting: F0 = mean, F_m = F_{m-1} + lr * tree(residuals).
// Returns predictions on `queries`.
inline std::vector<double> NaiveBoosting(const std::vector<std::vector<double>>& x,
                                         const std::vector<double>& y, int n_trees,
                                         double lr, int max_depth, int min_leaf,
                                         const std::vector<std::vector<double>>& queries) {
  const size_t n = y.size();
  std::vector<size_t> rows(n);
  std::iota(rows.begin(), rows.end(), size_t{0});
  const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> fitted(n, base);
  std::vector<double> out(queries.size(), base);
  for (int m = 0; m < n_trees; ++m) {
    std::vector<double> residual(n);
    for (size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    const auto tree = OracleTree(x, residual, rows, 0, max_depth, min_leaf);
    for (size_t i = 0; i < n; ++i) fitted[i] += lr * tree->Predict(x[i]);
    for (size_t q = 0; q < queries.size(); ++q) out[q] += lr * tree->Predict(queries[q]);
  }
  return out;
}

inline FeatureMatrix ToMatrix(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m(0, rows.empty() ? 0 : rows[0].size());
  for (const auto& r : rows) m.AppendRow(r);
  return m;
}

// Small integer-valued fixture: many exact ties in features and targets.
struct ToySet {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
};

inline ToySet RandomToySet(Gen& gen, int rows, int features, int value_range) {
  ToySet set;
  for (int r = 0; r < rows; ++r) {
    std::vector<double> row;
    for (int f = 0; f < features; ++f) row.push_back(gen.Int(0, value_range));
    set.x.push_back(row);
    set.y.push_back(gen.Int(0, 7));
  }
  return set;
}

}  // namespace triplescore::testing

#endif  // TRIPLESCORE_TESTS_GBRT_TESTING_H_
