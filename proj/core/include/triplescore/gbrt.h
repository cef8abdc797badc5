#ifndef TRIPLESCORE_GBRT_H_
#define TRIPLESCORE_GBRT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triplescore/corpus.h"

namespace triplescore {

// Row-major feature matrix for the scorer.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(size_t rows, size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  double operator()(size_t r, size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(size_t r, size_t c) { return values_[r * cols_ + c]; }
  std::span<const double> row(size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  void AppendRow(std::span<const double> row);
  // New matrix holding only `columns`, in the given order.
  FeatureMatrix SelectColumns(std::span<const size_t> columns) const;
  FeatureMatrix SelectRows(std::span<const size_t> rows) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> values_;
};

struct GbrtConfig {
  int n_trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 1;
  double subsample = 1.0;
  uint64_t seed = 0;

  void Validate() const;
  std::string ToString() const;
  friend bool operator==(const GbrtConfig&, const GbrtConfig&) = default;
};

// Binary regression tree stored as flat node arrays; node 0 is the root.
// Leaves have feature == -1. Rows go left when x[feature] <= threshold.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  double Predict(std::span<const double> x) const;
  // Index of the leaf `x` is routed to.
  int LeafIndex(std::span<const double> x) const;
  int Depth() const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& mutable_nodes() { return nodes_; }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<Node> nodes_;
};

// Least-squares CART on the rows listed in `rows` (all rows when empty).
// Splits maximize the reduction in squared error over thresholds placed at
// midpoints between consecutive distinct values; ties (gains within a
// relative 1e-12) go to the lowest feature index, then the lowest threshold.
// A split must reduce the error. Leaf value is the mean target.
RegressionTree FitTree(const FeatureMatrix& x, std::span<const double> targets,
                       const GbrtConfig& config,
                       std::span<const size_t> rows = {});

enum class ScorerMode { kRegression, kBinary };

std::string_view ScorerModeName(ScorerMode mode);
ScorerMode ParseScorerMode(std::string_view name);

class GbrtEnsemble {
 public:
  ScorerMode mode = ScorerMode::kRegression;
  GbrtConfig config;
  double base_score = 0.0;
  size_t n_features = 0;
  std::vector<RegressionTree> trees;

  // base_score + learning_rate * sum of tree outputs, accumulated stage by
  // stage. Binary ensembles return the logit. Throws ArgumentError on a width
  // mismatch.
  double PredictRaw(std::span<const double> x) const;
  // Regression: nearest integer (halves away from zero) clamped to [0, 7].
  // Binary: 5 when sigmoid(raw) >= 0.5, else 2.
  int PredictScore(std::span<const double> x) const;

  // Text container, see docs in gbrt.cc. Doubles are written in shortest
  // round-trip form so a reload predicts bitwise identically.
  std::string Serialize() const;
  static GbrtEnsemble Deserialize(std::string_view text);
  void Save(const std::filesystem::path& path) const;
  static GbrtEnsemble Load(const std::filesystem::path& path);

  friend bool operator==(const GbrtEnsemble&, const GbrtEnsemble&) = default;
};

// Least-squares boosting from base_score = mean(y).
GbrtEnsemble FitRegression(const FeatureMatrix& x, std::span<const double> y,
                           const GbrtConfig& config,
                           std::vector<double>* stage_mse = nullptr);

// Logistic-loss boosting from the log-odds of the positive rate; tree
// structure is fit to the residuals label - sigmoid(F) and each leaf takes
// the one-step Newton value sum(residual) / sum(p (1 - p)). Throws
// ConfigError unless both classes are present.
GbrtEnsemble FitBinary(const FeatureMatrix& x, const std::vector<bool>& labels,
                       const GbrtConfig& config);

struct BinaryExample {
  size_t source_index = 0;  // position in the input triple list
  bool label = false;
};

// score <= 2 -> false, score >= 5 -> true, 3 and 4 dropped.
std::vector<BinaryExample> RelabelBinary(std::span<const ScoredTriple> triples);
std::optional<bool> RelabelScore(int score);

int RoundScore(double raw);
int BinaryScore(double raw);
double Sigmoid(double x);

}  // namespace triplescore

#endif  // TRIPLESCORE_GBRT_H_
