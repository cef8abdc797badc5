#ifndef TRIPLESCORE_METRICS_H_
#define TRIPLESCORE_METRICS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "triplescore/corpus.h"

namespace triplescore {

// Fraction of pairs with |pred - truth| <= 2.
double AccuracyAt2(std::span<const int> predicted, std::span<const int> truth);

// Mean |pred - truth|.
double AverageScoreDifference(std::span<const int> predicted,
                              std::span<const int> truth);

// Penalty for a pair that is tied in exactly one of the two rankings.
inline constexpr double kTiePenalty = 0.5;

// Kendall tau distance with ties over one entity's types: 1 per discordant
// pair, kTiePenalty per pair tied in exactly one ranking, normalized by the
// number of pairs. nullopt for fewer than two types.
std::optional<double> KendallTauEntity(std::span<const int> predicted,
                                       std::span<const int> truth);

struct EntityScores {
  std::vector<int> predicted;
  std::vector<int> truth;
};

// Unweighted mean of per-entity tau over entities with at least two types.
// Throws ArgumentError when no entity qualifies.
double AveragedTau(std::span<const EntityScores> entities);

struct EvaluationReport {
  double accuracy = 0.0;
  double asd = 0.0;
  double tau = 0.0;
  size_t n_pairs = 0;
  size_t n_entities = 0;
  size_t n_entities_scored = 0;  // entities contributing to tau

  std::string ToText() const;
  std::string ToJson() const;
};

using PredictionMap = std::map<std::pair<std::string, std::string>, int>;

// Evaluates predictions against ground-truth triples. Throws NotFoundError
// naming the first ground-truth pair without a prediction. When no entity
// has two types, tau is reported as 0 with n_entities_scored = 0.
EvaluationReport Evaluate(const PredictionMap& predictions,
                          std::span<const ScoredTriple> truth);

// Prediction file: "entity<TAB>type<TAB>predicted_score" per line.
PredictionMap LoadPredictions(const std::filesystem::path& path);

}  // namespace triplescore

#endif  // TRIPLESCORE_METRICS_H_
