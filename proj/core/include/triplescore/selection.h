#ifndef TRIPLESCORE_SELECTION_H_
#define TRIPLESCORE_SELECTION_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "triplescore/gbrt.h"

namespace triplescore {

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // per instance

  // Instance indices outside / inside `fold`.
  std::vector<size_t> TrainRows(int fold) const;
  std::vector<size_t> TestRows(int fold) const;
};

// Entity-grouped k-fold partition: distinct entities are shuffled with
// `seed` and dealt round-robin, so every entity's instances share a fold and
// fold sizes (in entities) differ by at most one. Throws ArgumentError when
// there are fewer distinct entities than folds.
FoldAssignment KFoldSplit(std::span<const std::string> instance_entities, int k,
                          uint64_t seed);

// Regression targets are scores 0..7; binary targets are 0/1.
struct ScorerData {
  ScorerMode mode = ScorerMode::kRegression;
  FeatureMatrix features;
  std::vector<double> targets;
};

struct CvResult {
  // Regression: mean absolute error of rounded scores (lower is better).
  // Binary: accuracy (higher is better).
  double value = 0.0;
  // A fold could not be trained (e.g. one class); the result is worst.
  bool failed = false;
};

// True when `a` is strictly better than `b` under `mode`. Failed results
// are worse than everything else.
bool CvBetter(ScorerMode mode, const CvResult& a, const CvResult& b);

// Cross-validated metric using the listed feature columns (an empty list
// gives the constant predictor: mean score or majority class).
CvResult CvMetric(const ScorerData& data, std::span<const size_t> columns,
                  const FoldAssignment& folds, const GbrtConfig& config);

struct SelectionRound {
  size_t feature = 0;
  CvResult score;
};

struct SelectionResult {
  CvResult baseline;                 // empty feature set
  std::vector<SelectionRound> rounds;  // accepted additions, in order
  std::vector<size_t> selected;
  CvResult best;

  // One line per round, suitable for the selection log.
  std::string Report(std::span<const std::string> schema) const;
};

// Greedy forward selection: each round adds the feature with the best CV
// metric (lowest index on ties) and stops once no addition strictly
// improves on the current set.
SelectionResult GreedyForwardSelect(const ScorerData& data,
                                    const FoldAssignment& folds,
                                    const GbrtConfig& config);

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct SearchSpace {
  IntRange n_trees{20, 300};
  RealRange learning_rate{0.01, 0.3};  // sampled log-uniformly
  IntRange max_depth{1, 6};
  IntRange min_samples_leaf{1, 20};
  RealRange subsample{0.5, 1.0};
  int budget = 20;
  uint64_t seed = 0;
  // Evaluate the supplied default configuration as trial 0.
  bool include_default = true;

  void Validate() const;
  bool Contains(const GbrtConfig& config) const;
  GbrtConfig Sample(std::mt19937_64& rng, uint64_t config_seed) const;
};

struct TuningTrial {
  GbrtConfig config;
  CvResult score;
};

struct TuningResult {
  GbrtConfig best_config;
  CvResult best_score;
  std::vector<TuningTrial> trials;
};

// Seeded random search; the earliest trial wins ties.
TuningResult TuneHyperparameters(const ScorerData& data,
                                 std::span<const size_t> columns,
                                 const FoldAssignment& folds,
                                 const SearchSpace& space,
                                 const GbrtConfig& default_config);

// Trains the deployable scorer on all rows of `data` restricted to `columns`.
GbrtEnsemble FitScorer(const ScorerData& data, std::span<const size_t> columns,
                       const GbrtConfig& config);

}  // namespace triplescore

#endif  // TRIPLESCORE_SELECTION_H_
