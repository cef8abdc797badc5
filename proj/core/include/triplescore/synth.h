#ifndef TRIPLESCORE_SYNTH_H_
#define TRIPLESCORE_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace triplescore {

// Sizes of a synthetic knowledge base with planted structure: every type
// owns disjoint signature words and entities, single-type entities are
// described mostly by their type's signatures, and multi-type entities mix
// the signatures of their types in proportion to hidden affinity weights
// from which their ground-truth scores are derived.
struct SynthSpec {
  int n_types = 5;
  int n_single = 200;        // single-type entities (classifier training)
  int n_scored = 120;        // multi-type entities (scorer data)
  int signature_words = 12;  // per type
  int signature_entities = 12;
  int generic_words = 150;
  int generic_entities = 60;
  int article_tokens = 60;
  int article_anchors = 8;
  int sentences_per_entity = 4;
  double signature_rate = 0.35;
  double eval_fraction = 0.3;
  std::string domain = "profession";
  uint64_t seed = 7;

  void Validate() const;
};

struct SynthPaths {
  std::filesystem::path articles;
  std::filesystem::path sentences;
  std::filesystem::path kb_types;
  std::filesystem::path train_triples;
  std::filesystem::path eval_triples;
  std::filesystem::path planted;
  std::filesystem::path config;
};

// Planted signature items per type name.
struct PlantedSignatures {
  std::map<std::string, std::vector<std::string>> words;
  std::map<std::string, std::vector<std::string>> entities;
  std::vector<std::string> generic_words;
  std::vector<std::string> generic_entities;
};

// Writes the corpus, KB, scored datasets, planted signatures and a pipeline
// config into `out_dir`. Output bytes depend only on `spec`.
SynthPaths GenerateSynthetic(const SynthSpec& spec,
                             const std::filesystem::path& out_dir);

PlantedSignatures LoadPlanted(const std::filesystem::path& path);

}  // namespace triplescore

#endif  // TRIPLESCORE_SYNTH_H_
