#include "triplescore/selection.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "triplescore/util.h"

namespace triplescore {

std::vector<size_t> FoldAssignment::TrainRows(int fold) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<size_t> FoldAssignment::TestRows(int fold) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) rows.push_back(i);
  }
  return rows;
}

FoldAssignment KFoldSplit(std::span<const std::string> instance_entities, int k,
                          uint64_t seed) {
  if (k < 2) throw ArgumentError("k-fold split needs k >= 2");
  std::vector<std::string> entities;
  std::map<std::string, size_t, std::less<>> position;
  for (const auto& entity : instance_entities) {
    if (position.emplace(entity, entities.size()).second) entities.push_back(entity);
  }
  if (entities.size() < static_cast<size_t>(k)) {
    throw ArgumentError("k-fold split needs at least " + std::to_string(k) +
                        " distinct entities, got " + std::to_string(entities.size()));
  }
  std::vector<size_t> order(entities.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> entity_fold(entities.size());
  for (size_t i = 0; i < order.size(); ++i) {
    entity_fold[order[i]] = static_cast<int>(i % static_cast<size_t>(k));
  }
  FoldAssignment folds;
  folds.k = k;
  folds.fold_of.reserve(instance_entities.size());
  for (const auto& entity : instance_entities) {
    folds.fold_of.push_back(entity_fold[position.find(entity)->second]);
  }
  return folds;
}

bool CvBetter(ScorerMode mode, const CvResult& a, const CvResult& b) {
  if (a.failed) return false;
  if (b.failed) return true;
  return mode == ScorerMode::kRegression ? a.value < b.value : a.value > b.value;
}

GbrtEnsemble FitScorer(const ScorerData& data, std::span<const size_t> columns,
                       const GbrtConfig& config) {
  const FeatureMatrix x = data.features.SelectColumns(columns);
  if (data.mode == ScorerMode::kRegression) {
    return FitRegression(x, data.targets, config);
  }
  std::vector<bool> labels;
  labels.reserve(data.targets.size());
  for (const double t : data.targets) labels.push_back(t > 0.5);
  return FitBinary(x, labels, config);
}

CvResult CvMetric(const ScorerData& data, std::span<const size_t> columns,
                  const FoldAssignment& folds, const GbrtConfig& config) {
  if (folds.fold_of.size() != data.features.rows() ||
      data.targets.size() != data.features.rows()) {
    throw ArgumentError("fold assignment does not match the data");
  }
  const FeatureMatrix x = data.features.SelectColumns(columns);
  double total = 0.0;
  size_t count = 0;
  for (int fold = 0; fold < folds.k; ++fold) {
    const auto train_rows = folds.TrainRows(fold);
    const auto test_rows = folds.TestRows(fold);
    if (train_rows.empty() || test_rows.empty()) continue;
    ScorerData train;
    train.mode = data.mode;
    train.features = x.SelectRows(train_rows);
    for (const size_t r : train_rows) train.targets.push_back(data.targets[r]);
    std::vector<size_t> all(x.cols());
    for (size_t c = 0; c < all.size(); ++c) all[c] = c;
    GbrtEnsemble model;
    try {
      model = FitScorer(train, all, config);
    } catch (const ConfigError&) {
      return {0.0, true};
    }
    for (const size_t r : test_rows) {
      const double raw = model.PredictRaw(x.row(r));
      if (data.mode == ScorerMode::kRegression) {
        total += std::abs(static_cast<double>(RoundScore(raw)) - data.targets[r]);
      } else {
        const bool predicted = Sigmoid(raw) >= 0.5;
        total += predicted == (data.targets[r] > 0.5) ? 1.0 : 0.0;
      }
      ++count;
    }
  }
  if (count == 0) throw ArgumentError("cross-validation produced no predictions");
  return {total / static_cast<double>(count), false};
}

std::string SelectionResult::Report(std::span<const std::string> schema) const {
  auto show = [](const CvResult& r) {
    return r.failed ? std::string("failed") : FormatDouble(r.value);
  };
  std::ostringstream out;
  out << "round 0\t(baseline)\t" << show(baseline) << "\n";
  for (size_t i = 0; i < rounds.size(); ++i) {
    const size_t f = rounds[i].feature;
    out << "round " << (i + 1) << "\t" << f << ":"
        << (f < schema.size() ? schema[f] : std::string("?")) << "\t"
        << show(rounds[i].score) << "\n";
  }
  out << "selected";
  for (const size_t f : selected) out << " " << f;
  out << "\nbest\t" << show(best) << "\n";
  return out.str();
}

SelectionResult GreedyForwardSelect(const ScorerData& data,
                                    const FoldAssignment& folds,
                                    const GbrtConfig& config) {
  const size_t n_features = data.features.cols();
  if (n_features == 0) throw ArgumentError("feature selection needs features");
  SelectionResult result;
  result.baseline = CvMetric(data, {}, folds, config);
  result.best = result.baseline;
  std::vector<bool> used(n_features, false);
  while (result.selected.size() < n_features) {
    bool have_candidate = false;
    size_t best_feature = 0;
    CvResult best_score;
    std::vector<size_t> trial = result.selected;
    trial.push_back(0);
    for (size_t f = 0; f < n_features; ++f) {
      if (used[f]) continue;
      trial.back() = f;
      const CvResult score = CvMetric(data, trial, folds, config);
      if (!have_candidate || CvBetter(data.mode, score, best_score)) {
        have_candidate = true;
        best_feature = f;
        best_score = score;
      }
    }
    if (!have_candidate || !CvBetter(data.mode, best_score, result.best)) break;
    used[best_feature] = true;
    result.selected.push_back(best_feature);
    result.rounds.push_back({best_feature, best_score});
    result.best = best_score;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Hyperparameter search

void SearchSpace::Validate() const {
  if (budget < 1) throw ArgumentError("search budget must be >= 1");
  if (n_trees.lo < 1 || n_trees.lo > n_trees.hi) {
    throw ArgumentError("empty or invalid n_trees range");
  }
  if (!(learning_rate.lo > 0.0 && learning_rate.lo <= learning_rate.hi &&
        learning_rate.hi <= 1.0)) {
    throw ArgumentError("empty or invalid learning_rate range");
  }
  if (max_depth.lo < 0 || max_depth.lo > max_depth.hi) {
    throw ArgumentError("empty or invalid max_depth range");
  }
  if (min_samples_leaf.lo < 1 || min_samples_leaf.lo > min_samples_leaf.hi) {
    throw ArgumentError("empty or invalid min_samples_leaf range");
  }
  if (!(subsample.lo > 0.0 && subsample.lo <= subsample.hi && subsample.hi <= 1.0)) {
    throw ArgumentError("empty or invalid subsample range");
  }
}

bool SearchSpace::Contains(const GbrtConfig& c) const {
  return c.n_trees >= n_trees.lo && c.n_trees <= n_trees.hi &&
         c.learning_rate >= learning_rate.lo && c.learning_rate <= learning_rate.hi &&
         c.max_depth >= max_depth.lo && c.max_depth <= max_depth.hi &&
         c.min_samples_leaf >= min_samples_leaf.lo &&
         c.min_samples_leaf <= min_samples_leaf.hi &&
         c.subsample >= subsample.lo && c.subsample <= subsample.hi;
}

GbrtConfig SearchSpace::Sample(std::mt19937_64& rng, uint64_t config_seed) const {
  auto pick_int = [&](const IntRange& range) {
    return std::uniform_int_distribution<int>(range.lo, range.hi)(rng);
  };
  auto pick_real = [&](const RealRange& range) {
    return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
  };
  GbrtConfig config;
  config.n_trees = pick_int(n_trees);
  const double log_lr = pick_real({std::log(learning_rate.lo), std::log(learning_rate.hi)});
  config.learning_rate =
      std::clamp(std::exp(log_lr), learning_rate.lo, learning_rate.hi);
  config.max_depth = pick_int(max_depth);
  config.min_samples_leaf = pick_int(min_samples_leaf);
  config.subsample = std::clamp(pick_real(subsample), subsample.lo, subsample.hi);
  config.seed = config_seed;
  return config;
}

TuningResult TuneHyperparameters(const ScorerData& data,
                                 std::span<const size_t> columns,
                                 const FoldAssignment& folds,
                                 const SearchSpace& space,
                                 const GbrtConfig& default_config) {
  space.Validate();
  if (space.include_default) {
    default_config.Validate();
    if (!space.Contains(default_config)) {
      throw ArgumentError("default scorer config lies outside the search space");
    }
  }
  std::mt19937_64 rng(space.seed);
  TuningResult result;
  for (int trial = 0; trial < space.budget; ++trial) {
    const GbrtConfig config = trial == 0 && space.include_default
                                  ? default_config
                                  : space.Sample(rng, default_config.seed);
    const CvResult score = CvMetric(data, columns, folds, config);
    result.trials.push_back({config, score});
    if (trial == 0 || CvBetter(data.mode, score, result.best_score)) {
      result.best_config = config;
      result.best_score = score;
    }
  }
  return result;
}

}  // namespace triplescore
