#include "triplescore/metrics.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <nlohmann/json.hpp>

#include "triplescore/util.h"

namespace triplescore {
namespace {

void CheckAligned(std::span<const int> predicted, std::span<const int> truth,
                  bool allow_empty) {
  if (predicted.size() != truth.size()) {
    throw ArgumentError("prediction and truth lists differ in length");
  }
  if (!allow_empty && predicted.empty()) {
    throw ArgumentError("metric over an empty list");
  }
}

int Sign(int value) { return (value > 0) - (value < 0); }

}  // namespace

double AccuracyAt2(std::span<const int> predicted, std::span<const int> truth) {
  CheckAligned(predicted, truth, false);
  size_t hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (std::abs(predicted[i] - truth[i]) <= 2) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double AverageScoreDifference(std::span<const int> predicted,
                              std::span<const int> truth) {
  CheckAligned(predicted, truth, false);
  int64_t total = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    total += std::abs(predicted[i] - truth[i]);
  }
  return static_cast<double>(total) / static_cast<double>(predicted.size());
}

std::optional<double> KendallTauEntity(std::span<const int> predicted,
                                       std::span<const int> truth) {
  CheckAligned(predicted, truth, true);
  const size_t n = predicted.size();
  if (n < 2) return std::nullopt;
  double penalty = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const int p = Sign(predicted[i] - predicted[j]);
      const int t = Sign(truth[i] - truth[j]);
      if (p != 0 && t != 0) {
        if (p != t) penalty += 1.0;
      } else if (p != t) {
        penalty += kTiePenalty;
      }
    }
  }
  return penalty / static_cast<double>(n * (n - 1) / 2);
}

double AveragedTau(std::span<const EntityScores> entities) {
  double total = 0.0;
  size_t scored = 0;
  for (const auto& entity : entities) {
    if (const auto tau = KendallTauEntity(entity.predicted, entity.truth)) {
      total += *tau;
      ++scored;
    }
  }
  if (scored == 0) throw ArgumentError("no entity has two or more types");
  return total / static_cast<double>(scored);
}

EvaluationReport Evaluate(const PredictionMap& predictions,
                          std::span<const ScoredTriple> truth) {
  if (truth.empty()) throw ArgumentError("evaluation over an empty truth set");
  std::vector<int> all_predicted;
  std::vector<int> all_truth;
  std::vector<EntityScores> grouped;
  std::map<std::string, size_t, std::less<>> position;
  for (const auto& triple : truth) {
    const auto it = predictions.find({triple.entity, triple.type_name});
    if (it == predictions.end()) {
      throw NotFoundError("no prediction for (" + triple.entity + ", " +
                          triple.type_name + ")");
    }
    all_predicted.push_back(it->second);
    all_truth.push_back(triple.score);
    auto [slot, inserted] = position.emplace(triple.entity, grouped.size());
    if (inserted) grouped.emplace_back();
    grouped[slot->second].predicted.push_back(it->second);
    grouped[slot->second].truth.push_back(triple.score);
  }
  EvaluationReport report;
  report.accuracy = AccuracyAt2(all_predicted, all_truth);
  report.asd = AverageScoreDifference(all_predicted, all_truth);
  report.n_pairs = truth.size();
  report.n_entities = grouped.size();
  for (const auto& entity : grouped) {
    if (entity.truth.size() >= 2) ++report.n_entities_scored;
  }
  report.tau = report.n_entities_scored > 0 ? AveragedTau(grouped) : 0.0;
  return report;
}

std::string EvaluationReport::ToText() const {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer),
                "accuracy  %.4f\n"
                "asd       %.4f\n"
                "tau       %.4f\n"
                "pairs     %zu\n"
                "entities  %zu\n"
                "tau_over  %zu\n",
                accuracy, asd, tau, n_pairs, n_entities, n_entities_scored);
  return buffer;
}

std::string EvaluationReport::ToJson() const {
  nlohmann::json j = {{"accuracy", accuracy},
                      {"asd", asd},
                      {"tau", tau},
                      {"n_pairs", n_pairs},
                      {"n_entities", n_entities},
                      {"n_entities_scored", n_entities_scored}};
  return j.dump(2) + "\n";
}

PredictionMap LoadPredictions(const std::filesystem::path& path) {
  PredictionMap predictions;
  const auto triples = LoadScoredTriples(path);
  for (const auto& triple : triples) {
    if (!predictions.emplace(std::make_pair(triple.entity, triple.type_name),
                             triple.score)
             .second) {
      throw ArgumentError("duplicate prediction for (" + triple.entity + ", " +
                          triple.type_name + ")");
    }
  }
  return predictions;
}

}  // namespace triplescore
