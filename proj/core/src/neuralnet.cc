#include "triplescore/neuralnet.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "triplescore/util.h"

namespace triplescore {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void ClassifierConfig::Validate() const {
  if (embedding_dim < 1) throw ArgumentError("embedding_dim must be >= 1");
  if (use_attention && attention_dim < 1) {
    throw ArgumentError("attention_dim must be >= 1");
  }
  if (hidden_units < 1) throw ArgumentError("hidden_units must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ArgumentError("dropout must lie in [0, 1)");
  }
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (corpus_kind == CorpusKind::kSentence && window_m < 1) {
    throw ArgumentError("sentence classifiers need window_m >= 1");
  }
}

std::string ClassifierConfig::ToString() const {
  std::ostringstream out;
  out << "row=" << row_id << " corpus=" << CorpusKindName(corpus_kind)
      << " window=" << window_m << " words=" << use_words
      << " attention=" << use_attention
      << " class_weights=" << use_class_weights << " d_w=" << embedding_dim
      << " d_a=" << attention_dim << " hidden=" << hidden_units
      << " dropout=" << FormatDouble(dropout) << " batch=" << batch_size
      << " epochs=" << epochs << " lr=" << FormatDouble(learning_rate)
      << " init=" << FormatDouble(init_scale) << " seed=" << seed;
  return out.str();
}

ClassifierConfig ConfigurationRow(int row_id) {
  struct Row {
    CorpusKind kind;
    bool words;
    bool attention;
    bool class_weights;
    int window;
  };
  static constexpr Row kRows[16] = {
      {CorpusKind::kArticle, true, true, false, 0},
      {CorpusKind::kArticle, true, false, false, 0},
      {CorpusKind::kArticle, true, true, true, 0},
      {CorpusKind::kArticle, true, false, true, 0},
      {CorpusKind::kArticle, false, true, false, 0},
      {CorpusKind::kArticle, false, false, false, 0},
      {CorpusKind::kArticle, false, true, true, 0},
      {CorpusKind::kArticle, false, false, true, 0},
      {CorpusKind::kSentence, true, true, false, 5},
      {CorpusKind::kSentence, true, false, false, 5},
      {CorpusKind::kSentence, true, true, true, 5},
      {CorpusKind::kSentence, true, false, true, 5},
      {CorpusKind::kSentence, true, true, false, 10},
      {CorpusKind::kSentence, true, false, false, 10},
      {CorpusKind::kSentence, true, true, true, 10},
      {CorpusKind::kSentence, true, false, true, 10},
  };
  if (row_id < 1 || row_id > 16) {
    throw ArgumentError("configuration row must be in 1..16, got " +
                        std::to_string(row_id));
  }
  const Row& row = kRows[row_id - 1];
  ClassifierConfig config;
  config.row_id = row_id;
  config.corpus_kind = row.kind;
  config.use_words = row.words;
  config.use_attention = row.attention;
  config.use_class_weights = row.class_weights;
  config.window_m = row.window;
  return config;
}

// ---------------------------------------------------------------------------
// Parameters

std::vector<ModelParams::Named> ModelParams::Tensors() {
  return {{"words.embeddings", &words.embeddings},
          {"words.attention", &words.attention},
          {"words.attention_weight", &words.attention_weight},
          {"words.attention_bias", &words.attention_bias},
          {"entities.embeddings", &entities.embeddings},
          {"entities.attention", &entities.attention},
          {"entities.attention_weight", &entities.attention_weight},
          {"entities.attention_bias", &entities.attention_bias},
          {"mlp.hidden_weights", &mlp.hidden_weights},
          {"mlp.hidden_bias", &mlp.hidden_bias},
          {"mlp.output_weights", &mlp.output_weights},
          {"mlp.output_bias", &mlp.output_bias}};
}

std::vector<ModelParams::ConstNamed> ModelParams::Tensors() const {
  auto& self = const_cast<ModelParams&>(*this);
  std::vector<ConstNamed> out;
  for (const auto& named : self.Tensors()) out.push_back({named.name, named.tensor});
  return out;
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams zeros;
  auto dst = zeros.Tensors();
  const auto src = Tensors();
  for (size_t i = 0; i < src.size(); ++i) {
    *dst[i].tensor = Matrix(src[i].tensor->rows(), src[i].tensor->cols());
  }
  return zeros;
}

namespace {

BagTables MakeBagTables(size_t vocab_size, const ClassifierConfig& config) {
  BagTables tables;
  tables.embeddings = Matrix(vocab_size, config.embedding_dim);
  if (config.use_attention) {
    tables.attention = Matrix(vocab_size, config.attention_dim);
    tables.attention_weight = Matrix(1, config.attention_dim);
    tables.attention_bias = Matrix(1, 1);
  }
  return tables;
}

}  // namespace

ClassifierModel ClassifierModel::Initialize(const ClassifierConfig& config,
                                            VocabularyPair vocabs,
                                            std::vector<std::string> classes) {
  config.Validate();
  ClassifierModel model;
  model.config = config;
  model.vocabs = std::move(vocabs);
  model.classes = std::move(classes);
  if (config.use_words) {
    model.params.words = MakeBagTables(model.vocabs.words.size(), config);
  }
  model.params.entities = MakeBagTables(model.vocabs.entities.size(), config);
  const auto hidden = static_cast<size_t>(config.hidden_units);
  model.params.mlp.hidden_weights = Matrix(model.input_dim(), hidden);
  model.params.mlp.hidden_bias = Matrix(1, hidden);
  model.params.mlp.output_weights = Matrix(hidden, model.classes.size());
  model.params.mlp.output_bias = Matrix(1, model.classes.size());

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-config.init_scale,
                                                 config.init_scale);
  for (auto& named : model.params.Tensors()) {
    for (double& value : named.tensor->values()) value = uniform(rng);
  }
  return model;
}

int ClassifierModel::input_dim() const {
  return (config.use_words ? 2 : 1) * config.embedding_dim;
}

std::optional<int> ClassifierModel::ClassIndex(std::string_view type_name) const {
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == type_name) return static_cast<int>(i);
  }
  return std::nullopt;
}

void ClassifierModel::RoundToFloat32() {
  for (auto& named : params.Tensors()) {
    for (double& value : named.tensor->values()) {
      value = static_cast<double>(static_cast<float>(value));
    }
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kModelMagic[8] = {'T', 'S', 'C', 'M', 'O', 'D', 'E', 'L'};
constexpr uint32_t kModelVersion = 1;

void PutU32(std::string& out, uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

void PutU64(std::string& out, uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

uint64_t GetLe(std::string_view bytes, size_t offset, int width) {
  uint64_t value = 0;
  for (int i = 0; i < width; ++i) {
    value |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[offset + i]))
             << (8 * i);
  }
  return value;
}

json VocabToJson(const Vocabulary& vocab) {
  json rows = json::array();
  for (int i = 0; i < vocab.size(); ++i) {
    rows.push_back(json::array({vocab.item(i), vocab.count(i)}));
  }
  return rows;
}

Vocabulary VocabFromJson(const json& rows, int min_count) {
  std::vector<std::pair<std::string, int64_t>> items;
  for (const auto& row : rows) {
    items.emplace_back(row.at(0).get<std::string>(), row.at(1).get<int64_t>());
  }
  return Vocabulary::FromRows(std::move(items), min_count);
}

json ConfigToJson(const ClassifierConfig& c) {
  return {{"row_id", c.row_id},
          {"corpus_kind", std::string(CorpusKindName(c.corpus_kind))},
          {"window_m", c.window_m},
          {"use_words", c.use_words},
          {"use_attention", c.use_attention},
          {"use_class_weights", c.use_class_weights},
          {"embedding_dim", c.embedding_dim},
          {"attention_dim", c.attention_dim},
          {"hidden_units", c.hidden_units},
          {"dropout", c.dropout},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"init_scale", c.init_scale},
          {"seed", c.seed}};
}

ClassifierConfig ConfigFromJson(const json& j) {
  ClassifierConfig c;
  c.row_id = j.at("row_id").get<int>();
  c.corpus_kind = ParseCorpusKind(j.at("corpus_kind").get<std::string>());
  c.window_m = j.at("window_m").get<int>();
  c.use_words = j.at("use_words").get<bool>();
  c.use_attention = j.at("use_attention").get<bool>();
  c.use_class_weights = j.at("use_class_weights").get<bool>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.hidden_units = j.at("hidden_units").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

}  // namespace

std::string ClassifierModel::Serialize() const {
  json header;
  header["format"] = "triplescore-classifier";
  header["config"] = ConfigToJson(config);
  header["min_count"] = {vocabs.words.min_count(), vocabs.entities.min_count()};
  header["word_vocab"] = VocabToJson(vocabs.words);
  header["entity_vocab"] = VocabToJson(vocabs.entities);
  header["classes"] = classes;
  json shapes = json::array();
  for (const auto& named : params.Tensors()) {
    shapes.push_back({{"name", named.name},
                      {"rows", named.tensor->rows()},
                      {"cols", named.tensor->cols()}});
  }
  header["tensors"] = shapes;
  const std::string header_text = header.dump();

  std::string out(kModelMagic, sizeof(kModelMagic));
  PutU32(out, kModelVersion);
  PutU64(out, header_text.size());
  out += header_text;
  for (const auto& named : params.Tensors()) {
    for (const double value : named.tensor->values()) {
      PutU32(out, std::bit_cast<uint32_t>(static_cast<float>(value)));
    }
  }
  return out;
}

ClassifierModel ClassifierModel::Deserialize(std::string_view bytes) {
  constexpr size_t kPrefix = sizeof(kModelMagic) + 4 + 8;
  if (bytes.size() < kPrefix ||
      std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw InputError("not a classifier model (bad magic)");
  }
  const auto version = static_cast<uint32_t>(GetLe(bytes, 8, 4));
  if (version != kModelVersion) {
    throw InputError("unsupported classifier model version " +
                     std::to_string(version));
  }
  const uint64_t header_size = GetLe(bytes, 12, 8);
  if (bytes.size() < kPrefix + header_size) {
    throw InputError("truncated classifier model header");
  }
  ClassifierModel model;
  try {
    const json header = json::parse(bytes.substr(kPrefix, header_size));
    model.config = ConfigFromJson(header.at("config"));
    const auto& min_counts = header.at("min_count");
    model.vocabs.words =
        VocabFromJson(header.at("word_vocab"), min_counts.at(0).get<int>());
    model.vocabs.entities =
        VocabFromJson(header.at("entity_vocab"), min_counts.at(1).get<int>());
    model.classes = header.at("classes").get<std::vector<std::string>>();
    auto tensors = model.params.Tensors();
    const auto& shapes = header.at("tensors");
    if (shapes.size() != tensors.size()) {
      throw InputError("classifier model has unexpected tensor count");
    }
    size_t offset = kPrefix + header_size;
    for (size_t t = 0; t < tensors.size(); ++t) {
      if (shapes[t].at("name").get<std::string>() != tensors[t].name) {
        throw InputError("classifier model tensor order mismatch");
      }
      Matrix matrix(shapes[t].at("rows").get<size_t>(),
                    shapes[t].at("cols").get<size_t>());
      if (bytes.size() < offset + 4 * matrix.size()) {
        throw InputError("truncated classifier model tensor data");
      }
      for (double& value : matrix.values()) {
        value = static_cast<double>(std::bit_cast<float>(
            static_cast<uint32_t>(GetLe(bytes, offset, 4))));
        offset += 4;
      }
      *tensors[t].tensor = std::move(matrix);
    }
    if (offset != bytes.size()) {
      throw InputError("trailing bytes after classifier model tensors");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed classifier model header: ") + e.what());
  }
  return model;
}

void ClassifierModel::Save(const std::filesystem::path& path) const {
  WriteFile(path, Serialize());
}

ClassifierModel ClassifierModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return Deserialize(bytes);
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

void SoftmaxInPlace(std::vector<double>& values) {
  double max_value = -std::numeric_limits<double>::infinity();
  for (const double v : values) max_value = std::max(max_value, v);
  double total = 0.0;
  for (double& v : values) {
    v = std::exp(v - max_value);
    total += v;
  }
  for (double& v : values) v /= total;
}

double AttentionLogit(const BagTables& tables, int32_t id) {
  const auto u = tables.attention.row(id);
  const auto w = tables.attention_weight.row(0);
  double logit = 0.0;
  for (size_t k = 0; k < w.size(); ++k) logit += w[k] * u[k];
  return logit + tables.attention_bias(0, 0);
}

bool UsesAnyItem(const ClassifierModel& model, const BagPair& bags) {
  return (model.config.use_words && !bags.words.empty()) ||
         !bags.entities.empty();
}

void CheckIds(const ItemBag& bag, const Matrix& embeddings) {
  for (const int32_t id : bag.ids()) {
    if (id < 0 || static_cast<size_t>(id) >= embeddings.rows()) {
      throw ArgumentError("item id " + std::to_string(id) +
                          " outside the embedding table");
    }
  }
}

ClassifierOutput ForwardUnchecked(const ClassifierModel& model,
                                  const BagPair& bags, ForwardMode mode,
                                  std::mt19937_64* rng, ForwardTrace* trace) {
  const ClassifierConfig& config = model.config;
  ForwardTrace local;
  ForwardTrace& t = trace != nullptr ? *trace : local;
  t = ForwardTrace{};

  t.input.reserve(model.input_dim());
  if (config.use_words) {
    CheckIds(bags.words, model.params.words.embeddings);
    const auto pooled = PooledRepresentation(bags.words, model.params.words,
                                             config.use_attention, &t.words);
    t.input.insert(t.input.end(), pooled.begin(), pooled.end());
  }
  CheckIds(bags.entities, model.params.entities.embeddings);
  const auto pooled = PooledRepresentation(
      bags.entities, model.params.entities, config.use_attention, &t.entities);
  t.input.insert(t.input.end(), pooled.begin(), pooled.end());

  const MlpParams& mlp = model.params.mlp;
  const size_t hidden = mlp.hidden_bias.cols();
  t.hidden_pre.assign(mlp.hidden_bias.values().begin(),
                      mlp.hidden_bias.values().end());
  for (size_t i = 0; i < t.input.size(); ++i) {
    const double x = t.input[i];
    if (x == 0.0) continue;
    const auto w = mlp.hidden_weights.row(i);
    for (size_t j = 0; j < hidden; ++j) t.hidden_pre[j] += x * w[j];
  }
  t.hidden.resize(hidden);
  for (size_t j = 0; j < hidden; ++j) t.hidden[j] = std::max(0.0, t.hidden_pre[j]);

  t.hidden_out = t.hidden;
  if (mode == ForwardMode::kTrain && config.dropout > 0.0) {
    if (rng == nullptr) throw ArgumentError("train-mode dropout needs an rng");
    const double keep = 1.0 - config.dropout;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    t.dropout_mask.resize(hidden);
    for (size_t j = 0; j < hidden; ++j) {
      t.dropout_mask[j] = uniform(*rng) < keep ? 1.0 / keep : 0.0;
      t.hidden_out[j] *= t.dropout_mask[j];
    }
  }

  ClassifierOutput out;
  const size_t classes = mlp.output_bias.cols();
  out.logits.assign(mlp.output_bias.values().begin(),
                    mlp.output_bias.values().end());
  for (size_t j = 0; j < hidden; ++j) {
    const double h = t.hidden_out[j];
    if (h == 0.0) continue;
    const auto w = mlp.output_weights.row(j);
    for (size_t c = 0; c < classes; ++c) out.logits[c] += h * w[c];
  }
  out.probs = out.logits;
  SoftmaxInPlace(out.probs);
  return out;
}

}  // namespace

std::vector<double> AttentionWeights(const ItemBag& bag, const BagTables& tables) {
  if (bag.empty()) throw ArgumentError("attention over an empty bag");
  if (tables.attention.empty()) throw ArgumentError("attention is disabled");
  std::vector<double> weights;
  weights.reserve(bag.size());
  for (const int32_t id : bag.ids()) weights.push_back(AttentionLogit(tables, id));
  SoftmaxInPlace(weights);
  return weights;
}

std::vector<double> PooledRepresentation(const ItemBag& bag,
                                         const BagTables& tables,
                                         bool use_attention,
                                         PooledTrace* trace) {
  const size_t dim = tables.embeddings.cols();
  PooledTrace local;
  PooledTrace& t = trace != nullptr ? *trace : local;
  t = PooledTrace{};
  t.pooled.assign(dim, 0.0);
  t.normalized.assign(dim, 0.0);
  if (bag.empty()) return t.normalized;

  if (use_attention) {
    t.attention_logits.reserve(bag.size());
    for (const int32_t id : bag.ids()) {
      t.attention_logits.push_back(AttentionLogit(tables, id));
    }
    t.attention = t.attention_logits;
    SoftmaxInPlace(t.attention);
  } else {
    t.attention.assign(bag.size(), 1.0);
  }

  const auto ids = bag.ids();
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto v = tables.embeddings.row(ids[i]);
    const double a = t.attention[i];
    for (size_t k = 0; k < dim; ++k) t.pooled[k] += a * v[k];
  }
  double squared = 0.0;
  for (const double c : t.pooled) squared += c * c;
  t.norm = std::sqrt(squared);
  if (t.norm > 0.0) {
    for (size_t k = 0; k < dim; ++k) t.normalized[k] = t.pooled[k] / t.norm;
  }
  return t.normalized;
}

ClassifierOutput Forward(const ClassifierModel& model, const BagPair& bags,
                         ForwardMode mode, std::mt19937_64* rng,
                         ForwardTrace* trace) {
  if (!UsesAnyItem(model, bags)) {
    throw ArgumentError("example has no items the model can use");
  }
  return ForwardUnchecked(model, bags, mode, rng, trace);
}

// ---------------------------------------------------------------------------
// Loss and backpropagation

std::vector<double> ClassWeights(std::span<const int64_t> counts) {
  if (counts.empty()) throw ArgumentError("class weights need at least one class");
  int64_t total = 0;
  for (const int64_t count : counts) {
    if (count <= 0) throw ArgumentError("class count must be positive");
    total += count;
  }
  const auto n_classes = static_cast<double>(counts.size());
  std::vector<double> weights;
  weights.reserve(counts.size());
  for (const int64_t count : counts) {
    weights.push_back(static_cast<double>(total) /
                      (n_classes * static_cast<double>(count)));
  }
  return weights;
}

namespace {

// Gradient of one bag's normalized pooled vector, given d loss / d normalized.
void BackpropBag(const ItemBag& bag, const BagTables& tables,
                 const PooledTrace& trace, std::span<const double> d_normalized,
                 bool use_attention, BagTables& grads) {
  if (bag.empty() || trace.norm == 0.0) return;
  const size_t dim = d_normalized.size();
  // z = c / |c|  =>  dc = (dz - z (z . dz)) / |c|
  double projection = 0.0;
  for (size_t k = 0; k < dim; ++k) projection += trace.normalized[k] * d_normalized[k];
  std::vector<double> d_pooled(dim);
  for (size_t k = 0; k < dim; ++k) {
    d_pooled[k] = (d_normalized[k] - trace.normalized[k] * projection) / trace.norm;
  }

  const auto ids = bag.ids();
  std::vector<double> d_weight(ids.size(), 0.0);
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto v = tables.embeddings.row(ids[i]);
    auto dv = grads.embeddings.row(ids[i]);
    const double a = trace.attention[i];
    double dot = 0.0;
    for (size_t k = 0; k < dim; ++k) {
      dv[k] += a * d_pooled[k];
      dot += v[k] * d_pooled[k];
    }
    d_weight[i] = dot;
  }
  if (!use_attention) return;

  // Softmax Jacobian: ds_i = a_i (da_i - sum_j a_j da_j).
  double mean = 0.0;
  for (size_t i = 0; i < ids.size(); ++i) mean += trace.attention[i] * d_weight[i];
  const auto w = tables.attention_weight.row(0);
  auto dw = grads.attention_weight.row(0);
  const size_t attn_dim = w.size();
  for (size_t i = 0; i < ids.size(); ++i) {
    const double ds = trace.attention[i] * (d_weight[i] - mean);
    const auto u = tables.attention.row(ids[i]);
    auto du = grads.attention.row(ids[i]);
    for (size_t k = 0; k < attn_dim; ++k) {
      dw[k] += ds * u[k];
      du[k] += ds * w[k];
    }
    grads.attention_bias(0, 0) += ds;
  }
}

}  // namespace

LossAndGradients ComputeLossAndGradients(std::span<const TrainingExample> batch,
                                         const ClassifierModel& model,
                                         std::span<const double> class_weights,
                                         ForwardMode mode, std::mt19937_64* rng) {
  if (batch.empty()) throw ArgumentError("empty batch");
  if (!class_weights.empty() &&
      class_weights.size() != model.classes.size()) {
    throw ArgumentError("class weight count does not match class count");
  }
  LossAndGradients result;
  result.gradients = model.params.ZerosLike();
  ModelParams& g = result.gradients;
  const MlpParams& mlp = model.params.mlp;
  const auto batch_size = static_cast<double>(batch.size());
  const size_t hidden = mlp.hidden_bias.cols();
  const size_t classes = mlp.output_bias.cols();
  const size_t dim = static_cast<size_t>(model.config.embedding_dim);

  ForwardTrace trace;
  for (const TrainingExample& example : batch) {
    if (example.label < 0 || static_cast<size_t>(example.label) >= classes) {
      throw ArgumentError("label outside the class range");
    }
    const ClassifierOutput out = Forward(model, example.bags, mode, rng, &trace);
    const double weight = class_weights.empty() ? 1.0 : class_weights[example.label];

    // -log softmax(logits)[y], via log-sum-exp for stability.
    double max_logit = out.logits[0];
    for (const double l : out.logits) max_logit = std::max(max_logit, l);
    double sum = 0.0;
    for (const double l : out.logits) sum += std::exp(l - max_logit);
    const double nll = max_logit + std::log(sum) - out.logits[example.label];
    result.loss += weight * nll;

    std::vector<double> d_logits(classes);
    for (size_t c = 0; c < classes; ++c) {
      const double target = static_cast<int>(c) == example.label ? 1.0 : 0.0;
      d_logits[c] = weight * (out.probs[c] - target) / batch_size;
    }

    std::vector<double> d_hidden(hidden, 0.0);
    for (size_t j = 0; j < hidden; ++j) {
      const auto w = mlp.output_weights.row(j);
      auto dw = g.mlp.output_weights.row(j);
      const double h = trace.hidden_out[j];
      double acc = 0.0;
      for (size_t c = 0; c < classes; ++c) {
        dw[c] += h * d_logits[c];
        acc += w[c] * d_logits[c];
      }
      d_hidden[j] = acc;
    }
    for (size_t c = 0; c < classes; ++c) g.mlp.output_bias(0, c) += d_logits[c];

    for (size_t j = 0; j < hidden; ++j) {
      if (!trace.dropout_mask.empty()) d_hidden[j] *= trace.dropout_mask[j];
      if (trace.hidden_pre[j] <= 0.0) d_hidden[j] = 0.0;
      g.mlp.hidden_bias(0, j) += d_hidden[j];
    }

    std::vector<double> d_input(trace.input.size(), 0.0);
    for (size_t i = 0; i < trace.input.size(); ++i) {
      const auto w = mlp.hidden_weights.row(i);
      auto dw = g.mlp.hidden_weights.row(i);
      const double x = trace.input[i];
      double acc = 0.0;
      for (size_t j = 0; j < hidden; ++j) {
        dw[j] += x * d_hidden[j];
        acc += w[j] * d_hidden[j];
      }
      d_input[i] = acc;
    }

    size_t offset = 0;
    if (model.config.use_words) {
      BackpropBag(example.bags.words, model.params.words, trace.words,
                  std::span<const double>(d_input).subspan(0, dim),
                  model.config.use_attention, g.words);
      offset = dim;
    }
    BackpropBag(example.bags.entities, model.params.entities, trace.entities,
                std::span<const double>(d_input).subspan(offset, dim),
                model.config.use_attention, g.entities);
  }
  result.loss /= batch_size;
  if (!std::isfinite(result.loss)) {
    throw NumericalError("non-finite training loss");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Optimizer

void AdamStep(std::span<double> params, std::span<const double> grads,
              std::span<double> first_moment, std::span<double> second_moment,
              const AdamOptions& options, int64_t step) {
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw ArgumentError("Adam shape mismatch");
  }
  if (step < 1) throw ArgumentError("Adam step counts from 1");
  const double correction1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = options.beta1 * first_moment[i] + (1.0 - options.beta1) * g;
    second_moment[i] =
        options.beta2 * second_moment[i] + (1.0 - options.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(const ModelParams& shape, AdamOptions options)
    : options_(options),
      first_moment_(shape.ZerosLike()),
      second_moment_(shape.ZerosLike()) {}

void AdamOptimizer::Step(ModelParams& params, const ModelParams& gradients) {
  ++step_;
  auto p = params.Tensors();
  const auto g = gradients.Tensors();
  auto m = first_moment_.Tensors();
  auto v = second_moment_.Tensors();
  if (p.size() != g.size()) throw ArgumentError("Adam tensor count mismatch");
  for (size_t i = 0; i < p.size(); ++i) {
    AdamStep(p[i].tensor->values(), g[i].tensor->values(), m[i].tensor->values(),
             v[i].tensor->values(), options_, step_);
  }
}

// ---------------------------------------------------------------------------
// Training and inference

ClassifierModel TrainClassifier(std::span<const TrainingExample> examples,
                                const ClassifierConfig& config,
                                VocabularyPair vocabs,
                                std::vector<std::string> classes,
                                TrainingLog* log) {
  config.Validate();
  if (classes.size() < 2) {
    throw ConfigError("classifier training needs at least two classes");
  }
  ClassifierModel model =
      ClassifierModel::Initialize(config, std::move(vocabs), std::move(classes));

  std::vector<TrainingExample> usable;
  usable.reserve(examples.size());
  for (const auto& example : examples) {
    if (example.label < 0 || example.label >= model.num_classes()) {
      throw ArgumentError("example label outside the class range");
    }
    if (UsesAnyItem(model, example.bags)) usable.push_back(example);
  }
  TrainingLog local_log;
  TrainingLog& history = log != nullptr ? *log : local_log;
  history = TrainingLog{};
  history.skipped_examples = examples.size() - usable.size();
  if (usable.empty()) throw ConfigError("no training example has usable items");

  std::vector<double> weights;
  if (config.use_class_weights) {
    // Balanced weights over the classes present; absent classes never appear
    // as targets so their weight is irrelevant.
    std::vector<int64_t> counts(model.classes.size(), 0);
    for (const auto& example : usable) ++counts[example.label];
    std::vector<int64_t> present;
    for (const int64_t count : counts) {
      if (count > 0) present.push_back(count);
    }
    const auto balanced = ClassWeights(present);
    weights.assign(counts.size(), 1.0);
    size_t next = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] > 0) weights[c] = balanced[next++];
    }
  }

  // Separate streams so the shuffle does not depend on the dropout draws.
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0xd1b54a32d192ed03ULL);
  AdamOptions adam;
  adam.learning_rate = config.learning_rate;
  AdamOptimizer optimizer(model.params, adam);

  const auto batch_size = static_cast<size_t>(config.batch_size);
  history.batches_per_epoch = (usable.size() + batch_size - 1) / batch_size;
  std::vector<size_t> order(usable.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<TrainingExample> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
      const size_t end = std::min(order.size(), start + batch_size);
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(usable[order[i]]);
      const auto step = ComputeLossAndGradients(batch, model, weights,
                                                ForwardMode::kTrain, &dropout_rng);
      optimizer.Step(model.params, step.gradients);
      history.batch_losses.push_back(step.loss);
      epoch_loss += step.loss * static_cast<double>(batch.size());
    }
    history.epoch_losses.push_back(epoch_loss / static_cast<double>(usable.size()));
  }
  model.RoundToFloat32();
  return model;
}

ClassifierOutput Predict(const ClassifierModel& model, const BagPair& bags) {
  return ForwardUnchecked(model, bags, ForwardMode::kInfer, nullptr, nullptr);
}

int ArgMax(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("argmax of an empty vector");
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

CandidateOutputs PredictCandidates(const ClassifierModel& model,
                                   const BagPair& bags,
                                   std::span<const std::string> candidates) {
  if (candidates.empty()) throw ArgumentError("empty candidate set");
  const ClassifierOutput full = Predict(model, bags);
  CandidateOutputs out;
  for (const auto& type_name : candidates) {
    if (const auto index = model.ClassIndex(type_name)) {
      out.probs.push_back(full.probs[*index]);
      out.logits.push_back(full.logits[*index]);
      out.missing.push_back(false);
    } else {
      out.probs.push_back(0.0);
      out.logits.push_back(kMissingClassLogit);
      out.missing.push_back(true);
    }
  }
  out.predicted = static_cast<size_t>(ArgMax(out.probs));
  return out;
}

double EvalAccuracy(const ClassifierModel& model,
                    std::span<const TrainingExample> examples) {
  if (examples.empty()) throw ArgumentError("accuracy over an empty set");
  size_t correct = 0;
  for (const auto& example : examples) {
    if (ArgMax(Predict(model, example.bags).probs) == example.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<double> AttentionScores(const BagTables& tables) {
  std::vector<double> scores;
  if (tables.attention.empty()) return scores;
  const auto w = tables.attention_weight.row(0);
  scores.reserve(tables.attention.rows());
  for (size_t id = 0; id < tables.attention.rows(); ++id) {
    const auto u = tables.attention.row(id);
    double s = 0.0;
    for (size_t k = 0; k < w.size(); ++k) s += w[k] * u[k];
    scores.push_back(s);
  }
  return scores;
}

}  // namespace triplescore
