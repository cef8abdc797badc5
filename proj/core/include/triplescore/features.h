#ifndef TRIPLESCORE_FEATURES_H_
#define TRIPLESCORE_FEATURES_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "triplescore/corpus.h"
#include "triplescore/gbrt.h"
#include "triplescore/neuralnet.h"

namespace triplescore {

// Value used for type pairs that never co-occur.
inline constexpr double kPmiFloor = -10.0;

// Type co-occurrence statistics over a knowledge base. Counts are numbers of
// entities; PMI is in nats without smoothing.
class PmiTable {
 public:
  // Each element is one entity's type set; duplicates inside a set are
  // ignored. Throws ArgumentError on an empty input.
  static PmiTable Build(std::span<const std::vector<std::string>> entity_types);

  // Scores of co-occurring pairs only.
  std::optional<double> Lookup(const std::string& a, const std::string& b) const;
  int64_t TypeCount(const std::string& type_name) const;
  int64_t PairCount(const std::string& a, const std::string& b) const;
  int64_t n_entities() const { return n_entities_; }
  const std::map<std::pair<std::string, std::string>, double>& pair_scores() const {
    return scores_;
  }

  // Tab-separated records: "n_entities N", "type T count" and
  // "pair A B count_ab pmi". Loading recomputes PMI from the counts.
  std::string ToTsv(std::span<const std::string> header = {}) const;
  static PmiTable FromTsv(const std::filesystem::path& path);

 private:
  static std::pair<std::string, std::string> Key(const std::string& a,
                                                 const std::string& b);
  void Recompute();

  int64_t n_entities_ = 0;
  std::map<std::string, int64_t> type_counts_;
  std::map<std::pair<std::string, std::string>, int64_t> pair_counts_;
  std::map<std::pair<std::string, std::string>, double> scores_;
};

// PMI between the target type and a classifier's predicted type: 0 when they
// are equal, the table value when the pair co-occurs, `floor` otherwise.
double PmiFeature(const PmiTable& table, const std::string& target,
                  const std::string& predicted, double floor = kPmiFloor);

inline constexpr int kOutputFeaturesPerClassifier = 6;
inline constexpr int kFeaturesPerClassifier = kOutputFeaturesPerClassifier + 1;

// For probabilities then logits over the candidate types:
// [v(t), v(t) - min, max - v(t)].
std::vector<double> ClassifierOutputFeatures(const CandidateOutputs& outputs,
                                             size_t target);

struct RegisteredClassifier {
  std::string id;
  ClassifierModel model;
};

// Ordered set of trained classifiers feeding the scorer.
class ClassifierRegistry {
 public:
  void Add(std::string id, ClassifierModel model);
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<RegisteredClassifier>& entries() const { return entries_; }
  std::vector<std::string> ids() const;

 private:
  std::vector<RegisteredClassifier> entries_;
};

// Feature names for a registry, in assembly order: per classifier the six
// output features then its PMI feature, and finally the candidate-set size.
std::vector<std::string> FeatureSchema(std::span<const std::string> classifier_ids);
std::string SchemaDigest(std::span<const std::string> schema);

// Per-classifier outputs for one entity over its candidate types, in
// registry order.
std::vector<CandidateOutputs> EntityOutputs(const ClassifierRegistry& registry,
                                            std::span<const BagPair> bags_per_classifier,
                                            const CandidateSet& candidates);

// Feature vector for (entity, candidates.valid_types[target]) from
// precomputed classifier outputs. Width is 7 * outputs.size() + 1.
std::vector<double> AssembleFeatures(std::span<const CandidateOutputs> outputs,
                                     const CandidateSet& candidates,
                                     size_t target, const PmiTable& pmi);

// Labeled or unlabeled feature rows ready for the scorer.
struct FeatureTable {
  std::vector<std::string> schema;
  std::vector<std::string> entities;
  std::vector<std::string> types;
  std::vector<int> scores;  // empty when unlabeled
  FeatureMatrix matrix;

  bool labeled() const { return !scores.empty(); }
  std::string digest() const { return SchemaDigest(schema); }

  // Header row "entity type <schema...> [score]", tab-separated, preceded by
  // `header` comment lines.
  std::string ToTsv(std::span<const std::string> header = {}) const;
  static FeatureTable FromTsv(const std::filesystem::path& path);
};

}  // namespace triplescore

#endif  // TRIPLESCORE_FEATURES_H_
