#ifndef TRIPLESCORE_PIPELINE_H_
#define TRIPLESCORE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "triplescore/gbrt.h"
#include "triplescore/neuralnet.h"
#include "triplescore/selection.h"
#include "triplescore/synth.h"

namespace triplescore {

// Pipeline settings read from a "key = value" file. Lines starting with '#'
// are comments. A key prefixed with the active domain ("profession.seed")
// overrides the plain key. Relative paths resolve against the directory of
// the config file. Flag overrides win over both.
struct PipelineConfig {
  std::string domain = "profession";
  uint64_t seed = 7;

  std::filesystem::path article_corpus;
  std::filesystem::path sentence_corpus;
  std::filesystem::path kb_types;
  std::filesystem::path train_triples;
  std::filesystem::path eval_triples;
  std::filesystem::path work_dir = "work";

  int min_count = 5;
  double holdout_fraction = 0.1;
  std::vector<int> classifier_rows{1, 2, 5, 9};
  int embedding_dim = 32;
  int attention_dim = 8;
  int hidden_units = 64;
  double dropout = 0.5;
  int batch_size = 10;
  int epochs = 5;
  double learning_rate = 0.005;

  ScorerMode mode = ScorerMode::kRegression;
  int folds = 10;
  GbrtConfig gbrt;
  int tune_budget = 20;

  // Parses `path` and applies `overrides` (same keys as the file). Throws
  // ConfigError on unknown keys or bad values, InputError if unreadable.
  static PipelineConfig Load(const std::filesystem::path& path,
                             const std::map<std::string, std::string>& overrides = {});
  // Defaults plus `overrides`; relative paths resolve against `base_dir`.
  static PipelineConfig FromMap(const std::map<std::string, std::string>& values,
                                const std::filesystem::path& base_dir);

  void Validate() const;
  // Every key except paths, in a stable order.
  std::string Canonical() const;
  // Hex digest of Canonical(); identical for runs that differ only in paths.
  std::string Digest() const;

  ClassifierConfig Classifier(int row_id) const;
  uint64_t ScorerSeed() const;
};

// Artifact locations under work_dir.
struct WorkLayout {
  std::filesystem::path root;

  std::filesystem::path Vocab(CorpusKind kind, bool words) const;
  std::filesystem::path ClassifierModelPath(int row_id) const;
  std::filesystem::path ClassifierReport(int row_id) const;
  std::filesystem::path Pmi() const;
  std::filesystem::path Features(std::string_view split) const;
  std::filesystem::path SelectionLog(ScorerMode mode) const;
  std::filesystem::path Selection(ScorerMode mode) const;
  std::filesystem::path Tuning(ScorerMode mode) const;
  std::filesystem::path Scorer(ScorerMode mode) const;
  std::filesystem::path ScorerMeta(ScorerMode mode) const;
  std::filesystem::path Predictions(ScorerMode mode) const;
  std::filesystem::path Warnings(ScorerMode mode) const;
  std::filesystem::path Evaluation(ScorerMode mode) const;
};

WorkLayout Layout(const PipelineConfig& config);

// Comment lines identifying the command, seeds and config digest.
std::vector<std::string> ArtifactHeader(const PipelineConfig& config,
                                        std::string_view command);

// Each command writes its artifacts and returns a short summary for stdout.
std::string CmdGenSynth(const SynthSpec& spec, const std::filesystem::path& out_dir);
std::string CmdBuildVocab(const PipelineConfig& config);
std::string CmdTrainClassifier(const PipelineConfig& config, int row_id);
std::string CmdEvalClassifier(const PipelineConfig& config, int row_id);
std::string CmdBuildPmi(const PipelineConfig& config);
std::string CmdExtractFeatures(const PipelineConfig& config);
std::string CmdSelectFeatures(const PipelineConfig& config);
std::string CmdTuneScorer(const PipelineConfig& config);
std::string CmdTrainScorer(const PipelineConfig& config);
// Scores `input` (the eval triples when empty). Scores in the input are
// ignored.
std::string CmdScore(const PipelineConfig& config,
                     const std::filesystem::path& input = {},
                     const std::filesystem::path& output = {});
std::string CmdEvaluate(const PipelineConfig& config,
                        const std::filesystem::path& predictions = {},
                        const std::filesystem::path& truth = {});

}  // namespace triplescore

#endif  // TRIPLESCORE_PIPELINE_H_
