// triplescore: command-line driver for the relevance scoring pipeline.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "triplescore/error.h"
#include "triplescore/pipeline.h"

namespace fs = std::filesystem;
using namespace triplescore;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string domain;
  std::string mode;
  std::string work_dir;
};

PipelineConfig ResolveConfig(const GlobalFlags& flags) {
  std::string path = flags.config;
  if (path.empty()) {
    if (const char* env = std::getenv("TRIPLESCORE_CONFIG")) path = env;
  }
  if (path.empty()) {
    throw ConfigError("no pipeline config: pass --config or set TRIPLESCORE_CONFIG");
  }
  if (!fs::exists(path)) throw InputError("config file not found: " + path);
  std::map<std::string, std::string> overrides;
  if (flags.seed) overrides["seed"] = std::to_string(*flags.seed);
  if (!flags.domain.empty()) overrides["domain"] = flags.domain;
  if (!flags.mode.empty()) overrides["mode"] = flags.mode;
  if (!flags.work_dir.empty()) overrides["work_dir"] = fs::absolute(flags.work_dir).string();
  return PipelineConfig::Load(path, overrides);
}

std::string OneLine(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-type relevance scoring pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config,
                 "pipeline config file (default: $TRIPLESCORE_CONFIG)");
  app.add_option("--seed", flags.seed, "override the pipeline seed");
  app.add_option("--domain", flags.domain, "profession or nationality")
      ->check(CLI::IsMember({"profession", "nationality"}));
  app.add_option("--mode", flags.mode, "scorer mode")
      ->check(CLI::IsMember({"regression", "binary"}));
  app.add_option("--work-dir", flags.work_dir, "artifact directory override");

  SynthSpec synth;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "write a synthetic corpus, KB and scored data");
  gen->add_option("--out", synth_out, "output directory")->required();
  gen->add_option("--types", synth.n_types, "number of types");
  gen->add_option("--entities", synth.n_single, "single-type entities");
  gen->add_option("--scored", synth.n_scored, "multi-type scored entities");
  gen->add_option("--eval-fraction", synth.eval_fraction, "share of scored entities held out");

  std::vector<int> rows;
  auto* vocab = app.add_subcommand("build-vocab", "count corpus vocabularies");
  auto* train_clf = app.add_subcommand("train-classifier", "train configured classifiers");
  train_clf->add_option("--row", rows, "configuration rows (default: classifier_rows)");
  auto* eval_clf = app.add_subcommand("eval-classifier", "report classifier accuracy");
  eval_clf->add_option("--row", rows, "configuration rows (default: classifier_rows)");
  auto* pmi = app.add_subcommand("build-pmi", "type co-occurrence statistics from the KB");
  auto* extract = app.add_subcommand("extract-features", "scorer features for scored triples");
  auto* select = app.add_subcommand("select-features", "greedy forward feature selection");
  auto* tune = app.add_subcommand("tune-scorer", "random search over scorer settings");
  auto* train_scorer = app.add_subcommand("train-scorer", "fit the boosted-tree scorer");

  std::string input;
  std::string output;
  auto* score = app.add_subcommand("score", "predict scores for (entity, type) pairs");
  score->add_option("--input", input, "triples to score (default: eval_triples)");
  score->add_option("--output", output, "prediction file");

  std::string predictions;
  std::string truth;
  auto* evaluate = app.add_subcommand("evaluate", "accuracy, ASD and Kendall tau");
  evaluate->add_option("--predictions", predictions, "prediction file");
  evaluate->add_option("--truth", truth, "ground-truth triples (default: eval_triples)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      if (flags.seed) synth.seed = *flags.seed;
      if (!flags.domain.empty()) synth.domain = flags.domain;
      std::cout << CmdGenSynth(synth, synth_out) << "\n";
      return 0;
    }
    const PipelineConfig config = ResolveConfig(flags);
    if (rows.empty()) rows = config.classifier_rows;
    if (vocab->parsed()) {
      std::cout << CmdBuildVocab(config) << "\n";
    } else if (train_clf->parsed()) {
      for (const int row : rows) std::cout << CmdTrainClassifier(config, row) << "\n";
    } else if (eval_clf->parsed()) {
      for (const int row : rows) std::cout << CmdEvalClassifier(config, row) << "\n";
    } else if (pmi->parsed()) {
      std::cout << CmdBuildPmi(config) << "\n";
    } else if (extract->parsed()) {
      std::cout << CmdExtractFeatures(config) << "\n";
    } else if (select->parsed()) {
      std::cout << CmdSelectFeatures(config) << "\n";
    } else if (tune->parsed()) {
      std::cout << CmdTuneScorer(config) << "\n";
    } else if (train_scorer->parsed()) {
      std::cout << CmdTrainScorer(config) << "\n";
    } else if (score->parsed()) {
      std::cout << CmdScore(config, input, output) << "\n";
    } else if (evaluate->parsed()) {
      std::cout << CmdEvaluate(config, predictions, truth);
    }
  } catch (const std::exception& e) {
    std::cerr << "triplescore: error: " << OneLine(e.what()) << "\n";
    return 1;
  }
  return 0;
}
