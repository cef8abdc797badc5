#include "triplescore/pipeline.h"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "triplescore/corpus.h"
#include "triplescore/error.h"
#include "triplescore/features.h"
#include "triplescore/metrics.h"
#include "triplescore/util.h"

namespace triplescore {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kDomains[] = {"profession", "nationality"};

std::string Trim(std::string_view text) {
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

bool IsDomain(std::string_view name) {
  return std::find(std::begin(kDomains), std::end(kDomains), name) != std::end(kDomains);
}

uint64_t DeriveSeed(uint64_t seed, std::string_view tag) {
  return Fnv1a64(std::to_string(seed) + "/" + std::string(tag));
}

int64_t IntValue(const std::string& key, const std::string& value) {
  try {
    return ParseInt(value);
  } catch (const ArgumentError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

uint64_t SeedValue(const std::string& key, const std::string& value) {
  try {
    return ParseUint64(value);
  } catch (const ArgumentError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

double RealValue(const std::string& key, const std::string& value) {
  try {
    return ParseDouble(value);
  } catch (const ArgumentError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::vector<int> RowList(const std::string& key, const std::string& value) {
  std::vector<int> rows;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    rows.push_back(static_cast<int>(IntValue(key, Trim(item))));
  }
  return rows;
}

fs::path Resolve(const fs::path& base_dir, const std::string& value) {
  if (value.empty()) return {};
  fs::path path(value);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return path.lexically_normal();
}

void RequireFile(const fs::path& path, std::string_view what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path is not configured");
  if (!fs::exists(path)) {
    throw InputError(std::string(what) + " not found: " + path.string());
  }
}

void RequireArtifact(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw NotFoundError("missing " + path.string() + " (run " + std::string(producer) +
                        " first)");
  }
}

json ReadJson(const fs::path& path) {
  const auto lines = ReadLines(path);
  std::string text;
  for (const auto& line : lines) text += line + "\n";
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

void WriteJson(const fs::path& path, const json& value) {
  WriteFile(path, value.dump(2) + "\n");
}

json GbrtToJson(const GbrtConfig& config) {
  return {{"n_trees", config.n_trees},
          {"learning_rate", config.learning_rate},
          {"max_depth", config.max_depth},
          {"min_samples_leaf", config.min_samples_leaf},
          {"subsample", config.subsample},
          {"seed", config.seed}};
}

GbrtConfig GbrtFromJson(const json& j) {
  GbrtConfig config;
  config.n_trees = j.at("n_trees").get<int>();
  config.learning_rate = j.at("learning_rate").get<double>();
  config.max_depth = j.at("max_depth").get<int>();
  config.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  config.subsample = j.at("subsample").get<double>();
  config.seed = j.at("seed").get<uint64_t>();
  config.Validate();
  return config;
}

json CvToJson(const CvResult& result) {
  return {{"value", result.value}, {"failed", result.failed}};
}

json Provenance(const PipelineConfig& config, std::string_view command) {
  return {{"command", command},
          {"domain", config.domain},
          {"seed", config.seed},
          {"config_digest", config.Digest()}};
}

// Corpora and vocabularies loaded lazily within one command.
class CorpusCache {
 public:
  explicit CorpusCache(const PipelineConfig& config)
      : config_(config), layout_(Layout(config)) {}

  const std::vector<ArticleDocument>& Articles() {
    if (!articles_) {
      RequireFile(config_.article_corpus, "article corpus");
      articles_ = LoadArticleCorpus(config_.article_corpus);
    }
    return *articles_;
  }

  const std::vector<AnnotatedText>& Sentences() {
    if (!sentences_) {
      RequireFile(config_.sentence_corpus, "sentence corpus");
      sentences_ = LoadSentenceCorpus(config_.sentence_corpus);
    }
    return *sentences_;
  }

  VocabularyPair Vocabs(CorpusKind kind) {
    const fs::path words = layout_.Vocab(kind, true);
    const fs::path entities = layout_.Vocab(kind, false);
    RequireArtifact(words, "build-vocab");
    RequireArtifact(entities, "build-vocab");
    return {Vocabulary::FromTsv(words, config_.min_count),
            Vocabulary::FromTsv(entities, config_.min_count)};
  }

  // Per-entity bags for one classifier configuration under `vocabs`.
  const std::map<std::string, BagPair>& Bags(const ClassifierConfig& classifier,
                                             const VocabularyPair& vocabs) {
    const auto key = std::make_pair(classifier.corpus_kind, classifier.window_m);
    auto it = bags_.find(key);
    if (it == bags_.end()) {
      auto bags = classifier.corpus_kind == CorpusKind::kArticle
                      ? CollectArticleBags(Articles(), vocabs)
                      : CollectSentenceBags(Sentences(), classifier.window_m, vocabs);
      it = bags_.emplace(key, std::move(bags)).first;
    }
    return it->second;
  }

 private:
  const PipelineConfig& config_;
  WorkLayout layout_;
  std::optional<std::vector<ArticleDocument>> articles_;
  std::optional<std::vector<AnnotatedText>> sentences_;
  std::map<std::pair<CorpusKind, int>, std::map<std::string, BagPair>> bags_;
};

std::vector<TrainingExample> LabeledExamples(const PipelineConfig& config,
                                             CorpusCache& cache,
                                             const ClassifierConfig& classifier,
                                             const VocabularyPair& vocabs,
                                             std::vector<std::string>* classes,
                                             size_t* skipped) {
  RequireFile(config.kb_types, "KB types");
  const auto kb = LoadKbTypes(config.kb_types);
  const auto labeled = LoadSingleTypeEntities(kb);
  *classes = labeled.classes;
  return BuildTrainingExamples(labeled, cache.Bags(classifier, vocabs), skipped);
}

Split<TrainingExample> Holdout(const PipelineConfig& config,
                               const std::vector<TrainingExample>& examples) {
  return SplitHoldout<TrainingExample>(examples, config.holdout_fraction,
                                       DeriveSeed(config.seed, "holdout"));
}

ClassifierRegistry LoadRegistry(const PipelineConfig& config) {
  const WorkLayout layout = Layout(config);
  ClassifierRegistry registry;
  for (const int row : config.classifier_rows) {
    const fs::path path = layout.ClassifierModelPath(row);
    RequireArtifact(path, "train-classifier --row " + std::to_string(row));
    registry.Add(std::to_string(row), ClassifierModel::Load(path));
  }
  return registry;
}

PmiTable LoadPmi(const PipelineConfig& config) {
  const fs::path path = Layout(config).Pmi();
  RequireArtifact(path, "build-pmi");
  return PmiTable::FromTsv(path);
}

// Feature rows for `triples` in input order. Entities without context for a
// classifier are scored with empty bags and reported in `warnings`.
FeatureTable BuildFeatures(CorpusCache& cache,
                           const ClassifierRegistry& registry, const PmiTable& pmi,
                           std::span<const ScoredTriple> triples, bool labeled,
                           std::vector<std::string>* warnings) {
  std::vector<const std::map<std::string, BagPair>*> bag_maps;
  for (const auto& entry : registry.entries()) {
    bag_maps.push_back(&cache.Bags(entry.model.config, entry.model.vocabs));
  }
  const auto groups = GroupCandidates(triples);
  std::map<std::pair<std::string, std::string>, std::vector<double>> rows;
  for (const auto& candidates : groups) {
    std::vector<BagPair> bags;
    for (size_t k = 0; k < bag_maps.size(); ++k) {
      const auto it = bag_maps[k]->find(candidates.entity);
      if (it == bag_maps[k]->end()) {
        bags.emplace_back();
        if (warnings) {
          warnings->push_back(candidates.entity + "\tc" + registry.entries()[k].id +
                              "\tno context; scored with empty bags");
        }
      } else {
        bags.push_back(it->second);
      }
    }
    const auto outputs = EntityOutputs(registry, bags, candidates);
    for (size_t t = 0; t < candidates.valid_types.size(); ++t) {
      rows[{candidates.entity, candidates.valid_types[t]}] =
          AssembleFeatures(outputs, candidates, t, pmi);
    }
  }
  FeatureTable table;
  table.schema = FeatureSchema(registry.ids());
  table.matrix = FeatureMatrix(0, table.schema.size());
  for (const auto& triple : triples) {
    table.entities.push_back(triple.entity);
    table.types.push_back(triple.type_name);
    table.matrix.AppendRow(rows.at({triple.entity, triple.type_name}));
    if (labeled) table.scores.push_back(triple.score);
  }
  return table;
}

struct ModeData {
  ScorerData data;
  std::vector<std::string> entities;
};

ModeData ScorerDataFor(const FeatureTable& table, ScorerMode mode) {
  if (!table.labeled()) throw InputError("scorer training needs labeled features");
  ModeData out;
  out.data.mode = mode;
  std::vector<size_t> keep;
  for (size_t r = 0; r < table.scores.size(); ++r) {
    if (mode == ScorerMode::kRegression) {
      keep.push_back(r);
      out.data.targets.push_back(table.scores[r]);
    } else if (const auto label = RelabelScore(table.scores[r])) {
      keep.push_back(r);
      out.data.targets.push_back(*label ? 1.0 : 0.0);
    }
  }
  out.data.features = table.matrix.SelectRows(keep);
  for (const size_t r : keep) out.entities.push_back(table.entities[r]);
  return out;
}

FeatureTable LoadTrainFeatures(const PipelineConfig& config) {
  const fs::path path = Layout(config).Features("train");
  RequireArtifact(path, "extract-features");
  return FeatureTable::FromTsv(path);
}

FoldAssignment Folds(const PipelineConfig& config, const ModeData& data) {
  return KFoldSplit(data.entities, config.folds, DeriveSeed(config.seed, "folds"));
}

void CheckDigest(const json& artifact, const std::string& expected,
                 const fs::path& path) {
  const auto digest = artifact.at("schema_digest").get<std::string>();
  if (digest != expected) {
    throw ConfigError("feature schema digest mismatch: " + path.string() + " has " +
                      digest + ", current features have " + expected);
  }
}

// Selected columns when a selection artifact exists, else every column.
std::vector<size_t> ScorerColumns(const PipelineConfig& config,
                                  const FeatureTable& table, std::string* source) {
  const fs::path path = Layout(config).Selection(config.mode);
  if (fs::exists(path)) {
    const json selection = ReadJson(path);
    CheckDigest(selection, table.digest(), path);
    *source = path.filename().string();
    return selection.at("selected").get<std::vector<size_t>>();
  }
  *source = "all";
  std::vector<size_t> columns(table.schema.size());
  for (size_t c = 0; c < columns.size(); ++c) columns[c] = c;
  return columns;
}

std::string JoinLines(const std::vector<std::string>& header) {
  std::string out;
  for (const auto& line : header) out += "# " + line + "\n";
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

PipelineConfig PipelineConfig::FromMap(const std::map<std::string, std::string>& values,
                                       const fs::path& base_dir) {
  PipelineConfig config;
  bool gbrt_seed_set = false;
  for (const auto& [key, value] : values) {
    if (key == "domain") {
      config.domain = value;
    } else if (key == "seed") {
      config.seed = SeedValue(key, value);
    } else if (key == "article_corpus") {
      config.article_corpus = Resolve(base_dir, value);
    } else if (key == "sentence_corpus") {
      config.sentence_corpus = Resolve(base_dir, value);
    } else if (key == "kb_types") {
      config.kb_types = Resolve(base_dir, value);
    } else if (key == "train_triples") {
      config.train_triples = Resolve(base_dir, value);
    } else if (key == "eval_triples") {
      config.eval_triples = Resolve(base_dir, value);
    } else if (key == "work_dir") {
      config.work_dir = Resolve(base_dir, value);
    } else if (key == "min_count") {
      config.min_count = static_cast<int>(IntValue(key, value));
    } else if (key == "holdout_fraction") {
      config.holdout_fraction = RealValue(key, value);
    } else if (key == "classifier_rows") {
      config.classifier_rows = RowList(key, value);
    } else if (key == "embedding_dim") {
      config.embedding_dim = static_cast<int>(IntValue(key, value));
    } else if (key == "attention_dim") {
      config.attention_dim = static_cast<int>(IntValue(key, value));
    } else if (key == "hidden_units") {
      config.hidden_units = static_cast<int>(IntValue(key, value));
    } else if (key == "dropout") {
      config.dropout = RealValue(key, value);
    } else if (key == "batch_size") {
      config.batch_size = static_cast<int>(IntValue(key, value));
    } else if (key == "epochs") {
      config.epochs = static_cast<int>(IntValue(key, value));
    } else if (key == "learning_rate") {
      config.learning_rate = RealValue(key, value);
    } else if (key == "mode") {
      try {
        config.mode = ParseScorerMode(value);
      } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "folds") {
      config.folds = static_cast<int>(IntValue(key, value));
    } else if (key == "n_trees") {
      config.gbrt.n_trees = static_cast<int>(IntValue(key, value));
    } else if (key == "gbrt_learning_rate") {
      config.gbrt.learning_rate = RealValue(key, value);
    } else if (key == "max_depth") {
      config.gbrt.max_depth = static_cast<int>(IntValue(key, value));
    } else if (key == "min_samples_leaf") {
      config.gbrt.min_samples_leaf = static_cast<int>(IntValue(key, value));
    } else if (key == "subsample") {
      config.gbrt.subsample = RealValue(key, value);
    } else if (key == "gbrt_seed") {
      config.gbrt.seed = SeedValue(key, value);
      gbrt_seed_set = true;
    } else if (key == "tune_budget") {
      config.tune_budget = static_cast<int>(IntValue(key, value));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (values.find("work_dir") == values.end()) {
    config.work_dir = Resolve(base_dir, "work");
  }
  if (!gbrt_seed_set) config.gbrt.seed = DeriveSeed(config.seed, "gbrt");
  config.Validate();
  return config;
}

PipelineConfig PipelineConfig::Load(const fs::path& path,
                                    const std::map<std::string, std::string>& overrides) {
  const auto lines = ReadLines(path);
  std::map<std::string, std::string> plain;
  std::map<std::string, std::map<std::string, std::string>> scoped;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string line = Trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string(), static_cast<int>(i + 1), "expected key = value");
    }
    const std::string key = Trim(std::string_view(line).substr(0, eq));
    const std::string value = Trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) {
      throw ParseError(path.string(), static_cast<int>(i + 1), "empty key");
    }
    const size_t dot = key.find('.');
    if (dot == std::string::npos) {
      plain[key] = value;
    } else {
      const std::string domain = key.substr(0, dot);
      if (!IsDomain(domain)) {
        throw ParseError(path.string(), static_cast<int>(i + 1),
                         "unknown domain prefix '" + domain + "'");
      }
      scoped[domain][key.substr(dot + 1)] = value;
    }
  }
  std::string domain = plain.count("domain") ? plain["domain"] : "profession";
  if (const auto it = overrides.find("domain"); it != overrides.end()) domain = it->second;
  std::map<std::string, std::string> merged = plain;
  for (const auto& [key, value] : scoped[domain]) merged[key] = value;
  for (const auto& [key, value] : overrides) merged[key] = value;
  merged["domain"] = domain;
  fs::path base_dir = path.parent_path();
  if (base_dir.empty()) base_dir = ".";
  return FromMap(merged, base_dir);
}

void PipelineConfig::Validate() const {
  if (!IsDomain(domain)) {
    throw ConfigError("domain must be profession or nationality, got '" + domain + "'");
  }
  if (classifier_rows.empty()) throw ConfigError("classifier_rows is empty");
  std::set<int> seen;
  for (const int row : classifier_rows) {
    if (row < 1 || row > 16) {
      throw ConfigError("classifier row " + std::to_string(row) + " outside 1..16");
    }
    if (!seen.insert(row).second) {
      throw ConfigError("classifier row " + std::to_string(row) + " listed twice");
    }
  }
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in (0, 1)");
  }
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (tune_budget < 1) throw ConfigError("tune_budget must be >= 1");
  try {
    gbrt.Validate();
    Classifier(classifier_rows.front()).Validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

std::string PipelineConfig::Canonical() const {
  std::ostringstream out;
  out << "domain=" << domain << "\nseed=" << seed << "\nmin_count=" << min_count
      << "\nholdout_fraction=" << FormatDouble(holdout_fraction) << "\nclassifier_rows=";
  for (size_t i = 0; i < classifier_rows.size(); ++i) {
    out << (i ? "," : "") << classifier_rows[i];
  }
  out << "\nembedding_dim=" << embedding_dim << "\nattention_dim=" << attention_dim
      << "\nhidden_units=" << hidden_units << "\ndropout=" << FormatDouble(dropout)
      << "\nbatch_size=" << batch_size << "\nepochs=" << epochs
      << "\nlearning_rate=" << FormatDouble(learning_rate)
      << "\nmode=" << ScorerModeName(mode) << "\nfolds=" << folds
      << "\ngbrt=" << gbrt.ToString() << "\ntune_budget=" << tune_budget << "\n";
  return out.str();
}

std::string PipelineConfig::Digest() const { return HexDigest(Fnv1a64(Canonical())); }

ClassifierConfig PipelineConfig::Classifier(int row_id) const {
  ClassifierConfig config = ConfigurationRow(row_id);
  config.embedding_dim = embedding_dim;
  config.attention_dim = attention_dim;
  config.hidden_units = hidden_units;
  config.dropout = dropout;
  config.batch_size = batch_size;
  config.epochs = epochs;
  config.learning_rate = learning_rate;
  config.seed = DeriveSeed(seed, "classifier/" + std::to_string(row_id));
  return config;
}

uint64_t PipelineConfig::ScorerSeed() const { return DeriveSeed(seed, "scorer"); }

// ---------------------------------------------------------------------------
// Layout

fs::path WorkLayout::Vocab(CorpusKind kind, bool words) const {
  return root / "vocab" /
         (std::string(CorpusKindName(kind)) + (words ? ".words.tsv" : ".entities.tsv"));
}
fs::path WorkLayout::ClassifierModelPath(int row_id) const {
  return root / "classifiers" / ("c" + std::to_string(row_id) + ".bin");
}
fs::path WorkLayout::ClassifierReport(int row_id) const {
  return root / "classifiers" / ("c" + std::to_string(row_id) + ".report.json");
}
fs::path WorkLayout::Pmi() const { return root / "pmi.tsv"; }
fs::path WorkLayout::Features(std::string_view split) const {
  return root / "features" / (std::string(split) + ".tsv");
}
fs::path WorkLayout::SelectionLog(ScorerMode mode) const {
  return root / ("selection." + std::string(ScorerModeName(mode)) + ".log");
}
fs::path WorkLayout::Selection(ScorerMode mode) const {
  return root / ("selection." + std::string(ScorerModeName(mode)) + ".json");
}
fs::path WorkLayout::Tuning(ScorerMode mode) const {
  return root / ("tuning." + std::string(ScorerModeName(mode)) + ".json");
}
fs::path WorkLayout::Scorer(ScorerMode mode) const {
  return root / ("scorer." + std::string(ScorerModeName(mode)) + ".gbrt");
}
fs::path WorkLayout::ScorerMeta(ScorerMode mode) const {
  return root / ("scorer." + std::string(ScorerModeName(mode)) + ".json");
}
fs::path WorkLayout::Predictions(ScorerMode mode) const {
  return root / ("predictions." + std::string(ScorerModeName(mode)) + ".tsv");
}
fs::path WorkLayout::Warnings(ScorerMode mode) const {
  return root / ("predictions." + std::string(ScorerModeName(mode)) + ".warnings.tsv");
}
fs::path WorkLayout::Evaluation(ScorerMode mode) const {
  return root / ("evaluation." + std::string(ScorerModeName(mode)));
}

WorkLayout Layout(const PipelineConfig& config) { return {config.work_dir}; }

std::vector<std::string> ArtifactHeader(const PipelineConfig& config,
                                        std::string_view command) {
  return {"triplescore " + std::string(command),
          "domain=" + config.domain + " seed=" + std::to_string(config.seed) +
              " mode=" + std::string(ScorerModeName(config.mode)),
          "config_digest=" + config.Digest()};
}

// ---------------------------------------------------------------------------
// Commands

std::string CmdGenSynth(const SynthSpec& spec, const fs::path& out_dir) {
  const SynthPaths paths = GenerateSynthetic(spec, out_dir);
  return "synthetic data written to " + out_dir.string() + " (config " +
         paths.config.filename().string() + ")";
}

std::string CmdBuildVocab(const PipelineConfig& config) {
  CorpusCache cache(config);
  const WorkLayout layout = Layout(config);
  std::set<CorpusKind> kinds;
  for (const int row : config.classifier_rows) kinds.insert(ConfigurationRow(row).corpus_kind);
  std::string summary;
  for (const CorpusKind kind : kinds) {
    const VocabularyPair vocabs =
        kind == CorpusKind::kArticle
            ? BuildVocabularies(std::span<const ArticleDocument>(cache.Articles()),
                                config.min_count)
            : BuildVocabularies(std::span<const AnnotatedText>(cache.Sentences()),
                                config.min_count);
    auto header = ArtifactHeader(config, "build-vocab");
    header.push_back("min_count=" + std::to_string(config.min_count));
    WriteFile(layout.Vocab(kind, true), vocabs.words.ToTsv(header));
    WriteFile(layout.Vocab(kind, false), vocabs.entities.ToTsv(header));
    if (!summary.empty()) summary += "; ";
    summary += std::string(CorpusKindName(kind)) + ": " +
               std::to_string(vocabs.words.size()) + " words, " +
               std::to_string(vocabs.entities.size()) + " entities";
  }
  return summary;
}

std::string CmdTrainClassifier(const PipelineConfig& config, int row_id) {
  const ClassifierConfig classifier = config.Classifier(row_id);
  CorpusCache cache(config);
  const VocabularyPair vocabs = cache.Vocabs(classifier.corpus_kind);
  std::vector<std::string> classes;
  size_t no_context = 0;
  const auto examples =
      LabeledExamples(config, cache, classifier, vocabs, &classes, &no_context);
  const auto split = Holdout(config, examples);
  TrainingLog log;
  const ClassifierModel model =
      TrainClassifier(split.train, classifier, vocabs, classes, &log);
  const WorkLayout layout = Layout(config);
  model.Save(layout.ClassifierModelPath(row_id));

  const double train_accuracy = EvalAccuracy(model, split.train);
  const double holdout_accuracy =
      split.eval.empty() ? 0.0 : EvalAccuracy(model, split.eval);
  json report = Provenance(config, "train-classifier");
  report["row"] = row_id;
  report["classifier"] = classifier.ToString();
  report["classifier_seed"] = classifier.seed;
  report["classes"] = classes;
  report["n_train"] = split.train.size();
  report["n_holdout"] = split.eval.size();
  report["entities_without_context"] = no_context;
  report["skipped_examples"] = log.skipped_examples;
  report["epoch_losses"] = log.epoch_losses;
  report["train_accuracy"] = train_accuracy;
  report["holdout_accuracy"] = holdout_accuracy;
  WriteJson(layout.ClassifierReport(row_id), report);

  char buffer[160];
  std::snprintf(buffer, sizeof(buffer),
                "c%d: train_accuracy=%.4f holdout_accuracy=%.4f (n_train=%zu n_holdout=%zu)",
                row_id, train_accuracy, holdout_accuracy, split.train.size(),
                split.eval.size());
  return buffer;
}

std::string CmdEvalClassifier(const PipelineConfig& config, int row_id) {
  const fs::path path = Layout(config).ClassifierModelPath(row_id);
  RequireArtifact(path, "train-classifier --row " + std::to_string(row_id));
  const ClassifierModel model = ClassifierModel::Load(path);
  CorpusCache cache(config);
  std::vector<std::string> classes;
  size_t no_context = 0;
  const auto examples =
      LabeledExamples(config, cache, model.config, model.vocabs, &classes, &no_context);
  if (classes != model.classes) {
    throw ConfigError("KB classes differ from the classes of " + path.string());
  }
  const auto split = Holdout(config, examples);
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer),
                "c%d: train_accuracy=%.4f holdout_accuracy=%.4f (n_train=%zu n_holdout=%zu)",
                row_id, EvalAccuracy(model, split.train),
                split.eval.empty() ? 0.0 : EvalAccuracy(model, split.eval),
                split.train.size(), split.eval.size());
  return buffer;
}

std::string CmdBuildPmi(const PipelineConfig& config) {
  RequireFile(config.kb_types, "KB types");
  const auto grouped = GroupKbTypes(LoadKbTypes(config.kb_types));
  std::vector<std::vector<std::string>> sets;
  sets.reserve(grouped.size());
  for (const auto& [entity, types] : grouped) sets.push_back(types);
  const PmiTable table = PmiTable::Build(sets);
  WriteFile(Layout(config).Pmi(), table.ToTsv(ArtifactHeader(config, "build-pmi")));
  return "pmi: " + std::to_string(table.n_entities()) + " entities, " +
         std::to_string(table.pair_scores().size()) + " co-occurring type pairs";
}

std::string CmdExtractFeatures(const PipelineConfig& config) {
  const ClassifierRegistry registry = LoadRegistry(config);
  const PmiTable pmi = LoadPmi(config);
  CorpusCache cache(config);
  const WorkLayout layout = Layout(config);
  std::string summary;
  for (const auto& [split, path] :
       {std::pair<std::string, fs::path>{"train", config.train_triples},
        std::pair<std::string, fs::path>{"eval", config.eval_triples}}) {
    if (split == "eval" && (path.empty() || !fs::exists(path))) continue;
    RequireFile(path, split + " triples");
    const auto triples = LoadScoredTriples(path);
    const FeatureTable table =
        BuildFeatures(cache, registry, pmi, triples, true, nullptr);
    auto header = ArtifactHeader(config, "extract-features");
    header.push_back("schema_digest=" + table.digest());
    WriteFile(layout.Features(split), table.ToTsv(header));
    if (!summary.empty()) summary += "; ";
    summary += split + ": " + std::to_string(table.matrix.rows()) + " rows x " +
               std::to_string(table.schema.size()) + " features";
  }
  return summary;
}

std::string CmdSelectFeatures(const PipelineConfig& config) {
  const FeatureTable table = LoadTrainFeatures(config);
  const ModeData data = ScorerDataFor(table, config.mode);
  const FoldAssignment folds = Folds(config, data);
  const SelectionResult result = GreedyForwardSelect(data.data, folds, config.gbrt);
  const WorkLayout layout = Layout(config);
  auto header = ArtifactHeader(config, "select-features");
  header.push_back("schema_digest=" + table.digest());
  WriteFile(layout.SelectionLog(config.mode), JoinLines(header) + result.Report(table.schema));

  json selection = Provenance(config, "select-features");
  selection["mode"] = ScorerModeName(config.mode);
  selection["schema_digest"] = table.digest();
  selection["folds"] = config.folds;
  selection["gbrt"] = GbrtToJson(config.gbrt);
  selection["baseline"] = CvToJson(result.baseline);
  selection["best"] = CvToJson(result.best);
  selection["selected"] = result.selected;
  std::vector<std::string> names;
  for (const size_t c : result.selected) names.push_back(table.schema[c]);
  selection["selected_names"] = names;
  WriteJson(layout.Selection(config.mode), selection);

  std::string summary = "selected " + std::to_string(result.selected.size()) + " of " +
                        std::to_string(table.schema.size()) + " features:";
  for (const auto& name : names) summary += " " + name;
  return summary + " (cv " + FormatDouble(result.best.value) + ", baseline " +
         FormatDouble(result.baseline.value) + ")";
}

std::string CmdTuneScorer(const PipelineConfig& config) {
  const FeatureTable table = LoadTrainFeatures(config);
  const ModeData data = ScorerDataFor(table, config.mode);
  const FoldAssignment folds = Folds(config, data);
  std::string column_source;
  const auto columns = ScorerColumns(config, table, &column_source);
  SearchSpace space;
  space.budget = config.tune_budget;
  space.seed = DeriveSeed(config.seed, "tune");
  const TuningResult result =
      TuneHyperparameters(data.data, columns, folds, space, config.gbrt);

  json tuning = Provenance(config, "tune-scorer");
  tuning["mode"] = ScorerModeName(config.mode);
  tuning["schema_digest"] = table.digest();
  tuning["columns"] = column_source;
  tuning["best_config"] = GbrtToJson(result.best_config);
  tuning["best_score"] = CvToJson(result.best_score);
  json trials = json::array();
  for (const auto& trial : result.trials) {
    trials.push_back({{"config", GbrtToJson(trial.config)}, {"score", CvToJson(trial.score)}});
  }
  tuning["trials"] = trials;
  WriteJson(Layout(config).Tuning(config.mode), tuning);
  return "best " + result.best_config.ToString() + " (cv " +
         FormatDouble(result.best_score.value) + " over " +
         std::to_string(result.trials.size()) + " trials)";
}

std::string CmdTrainScorer(const PipelineConfig& config) {
  const FeatureTable table = LoadTrainFeatures(config);
  const ModeData data = ScorerDataFor(table, config.mode);
  const WorkLayout layout = Layout(config);
  std::string column_source;
  const auto columns = ScorerColumns(config, table, &column_source);
  GbrtConfig gbrt = config.gbrt;
  std::string config_source = "default";
  const fs::path tuning_path = layout.Tuning(config.mode);
  if (fs::exists(tuning_path)) {
    const json tuning = ReadJson(tuning_path);
    CheckDigest(tuning, table.digest(), tuning_path);
    gbrt = GbrtFromJson(tuning.at("best_config"));
    config_source = tuning_path.filename().string();
  }
  const GbrtEnsemble model = FitScorer(data.data, columns, gbrt);
  model.Save(layout.Scorer(config.mode));

  json meta = Provenance(config, "train-scorer");
  meta["mode"] = ScorerModeName(config.mode);
  meta["schema"] = table.schema;
  meta["schema_digest"] = table.digest();
  meta["columns"] = columns;
  std::vector<std::string> names;
  for (const size_t c : columns) names.push_back(table.schema[c]);
  meta["column_names"] = names;
  meta["column_source"] = column_source;
  meta["gbrt"] = GbrtToJson(gbrt);
  meta["gbrt_source"] = config_source;
  meta["n_rows"] = data.data.features.rows();
  WriteJson(layout.ScorerMeta(config.mode), meta);
  return std::string(ScorerModeName(config.mode)) + " scorer: " +
         std::to_string(model.trees.size()) + " trees on " +
         std::to_string(columns.size()) + " features, " +
         std::to_string(data.data.features.rows()) + " rows";
}

std::string CmdScore(const PipelineConfig& config, const fs::path& input,
                     const fs::path& output) {
  const WorkLayout layout = Layout(config);
  const fs::path meta_path = layout.ScorerMeta(config.mode);
  RequireArtifact(meta_path, "train-scorer");
  RequireArtifact(layout.Scorer(config.mode), "train-scorer");
  const json meta = ReadJson(meta_path);
  const ClassifierRegistry registry = LoadRegistry(config);
  CheckDigest(meta, SchemaDigest(FeatureSchema(registry.ids())), meta_path);
  const GbrtEnsemble model = GbrtEnsemble::Load(layout.Scorer(config.mode));
  if (model.mode != config.mode) throw ConfigError("scorer mode differs from --mode");
  const auto columns = meta.at("columns").get<std::vector<size_t>>();
  const PmiTable pmi = LoadPmi(config);

  const fs::path input_path = input.empty() ? config.eval_triples : input;
  RequireFile(input_path, "input triples");
  const auto triples = LoadScoredTriples(input_path);
  CorpusCache cache(config);
  std::vector<std::string> warnings;
  const FeatureTable table =
      BuildFeatures(cache, registry, pmi, triples, false, &warnings);
  const FeatureMatrix x = table.matrix.SelectColumns(columns);

  auto header = ArtifactHeader(config, "score");
  header.push_back("schema_digest=" + table.digest());
  std::string out = JoinLines(header);
  for (size_t r = 0; r < x.rows(); ++r) {
    out += table.entities[r] + "\t" + table.types[r] + "\t" +
           std::to_string(model.PredictScore(x.row(r))) + "\n";
  }
  const fs::path output_path = output.empty() ? layout.Predictions(config.mode) : output;
  WriteFile(output_path, out);
  std::string sidecar = JoinLines(header);
  for (const auto& line : warnings) sidecar += line + "\n";
  fs::path warnings_path = output_path;
  warnings_path.replace_extension(".warnings.tsv");
  WriteFile(warnings_path, sidecar);
  return "scored " + std::to_string(x.rows()) + " pairs -> " + output_path.string() +
         (warnings.empty() ? "" : " (" + std::to_string(warnings.size()) + " warnings)");
}

std::string CmdEvaluate(const PipelineConfig& config, const fs::path& predictions,
                        const fs::path& truth) {
  const WorkLayout layout = Layout(config);
  const fs::path predictions_path =
      predictions.empty() ? layout.Predictions(config.mode) : predictions;
  RequireArtifact(predictions_path, "score");
  const fs::path truth_path = truth.empty() ? config.eval_triples : truth;
  RequireFile(truth_path, "ground-truth triples");
  const EvaluationReport report =
      Evaluate(LoadPredictions(predictions_path), LoadScoredTriples(truth_path));
  const std::string text = report.ToText();
  if (predictions.empty()) {
    fs::path base = layout.Evaluation(config.mode);
    WriteFile(base.string() + ".txt", JoinLines(ArtifactHeader(config, "evaluate")) + text);
    json j = json::parse(report.ToJson());
    j["provenance"] = Provenance(config, "evaluate");
    WriteJson(base.string() + ".json", j);
  }
  return text;
}

}  // namespace triplescore
