#ifndef TRIPLESCORE_NEURALNET_H_
#define TRIPLESCORE_NEURALNET_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triplescore/corpus.h"

namespace triplescore {

// Row-major dense matrix. Vectors are stored as 1 x n matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// One row of the classifier configuration grid plus the network and
// optimizer hyperparameters. Defaults are the full-scale settings.
struct ClassifierConfig {
  // Configuration-grid row id (1..16), 0 for an ad-hoc configuration.
  int row_id = 0;
  CorpusKind corpus_kind = CorpusKind::kArticle;
  // Context window for sentence corpora; 0 for article corpora.
  int window_m = 0;
  bool use_words = true;
  bool use_attention = true;
  bool use_class_weights = false;

  int embedding_dim = 300;  // d_w
  int attention_dim = 10;   // d_a
  int hidden_units = 2000;  // l
  double dropout = 0.5;
  int batch_size = 100;
  int epochs = 1;
  double learning_rate = 0.001;
  double init_scale = 0.05;
  uint64_t seed = 0;

  void Validate() const;
  // Stable textual form, also hashed into artifact digests.
  std::string ToString() const;
};

// The sixteen corpus/word/attention/class-weight/window combinations
// evaluated for each domain. Throws ArgumentError for ids outside 1..16.
ClassifierConfig ConfigurationRow(int row_id);

// Embedding and attention tables for one bag kind (words or entities).
// Attention tables are empty when attention is disabled; all tables are
// empty when the bag kind is unused.
struct BagTables {
  Matrix embeddings;        // |V| x d_w
  Matrix attention;         // |V| x d_a, the attention embeddings u_x
  Matrix attention_weight;  // 1 x d_a, w_a
  Matrix attention_bias;    // 1 x 1, b_a
};

struct MlpParams {
  Matrix hidden_weights;  // input_dim x l
  Matrix hidden_bias;     // 1 x l
  Matrix output_weights;  // l x C
  Matrix output_bias;     // 1 x C
};

struct ModelParams {
  BagTables words;
  BagTables entities;
  MlpParams mlp;

  struct Named {
    std::string_view name;
    Matrix* tensor;
  };
  struct ConstNamed {
    std::string_view name;
    const Matrix* tensor;
  };
  // Fixed enumeration order shared by initialization, the optimizer,
  // gradient checks and serialization.
  std::vector<Named> Tensors();
  std::vector<ConstNamed> Tensors() const;

  // Same shapes, all zeros.
  ModelParams ZerosLike() const;
};

class ClassifierModel {
 public:
  ClassifierConfig config;
  VocabularyPair vocabs;
  std::vector<std::string> classes;
  ModelParams params;

  // Shapes from config/vocabularies/classes, values ~ U(-init_scale,
  // init_scale) drawn from config.seed.
  static ClassifierModel Initialize(const ClassifierConfig& config,
                                    VocabularyPair vocabs,
                                    std::vector<std::string> classes);

  int num_classes() const { return static_cast<int>(classes.size()); }
  int input_dim() const;
  std::optional<int> ClassIndex(std::string_view type_name) const;

  // Binary container: 8-byte magic "TSCMODEL", u32 version, u64 header
  // length, JSON header (config, vocabularies, classes, tensor shapes), then
  // each tensor as little-endian float32 in header order. Parameters are
  // rounded to float32 on save; call RoundToFloat32 first if the in-memory
  // model must match the reloaded one bitwise.
  std::string Serialize() const;
  static ClassifierModel Deserialize(std::string_view bytes);
  void Save(const std::filesystem::path& path) const;
  static ClassifierModel Load(const std::filesystem::path& path);

  void RoundToFloat32();
};

struct ClassifierOutput {
  std::vector<double> probs;
  std::vector<double> logits;
};

struct PooledTrace {
  std::vector<double> attention_logits;  // per occurrence; empty without attention
  std::vector<double> attention;         // per occurrence; all 1 without attention
  std::vector<double> pooled;            // c, before normalization
  double norm = 0.0;
  std::vector<double> normalized;        // c / ||c||, zero when ||c|| = 0
};

struct ForwardTrace {
  PooledTrace words;
  PooledTrace entities;
  std::vector<double> input;
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::vector<double> dropout_mask;  // empty outside training
  std::vector<double> hidden_out;    // after dropout
};

enum class ForwardMode { kTrain, kInfer };

// Softmax over the bag's attention logits w_a.u_x + b_a, one weight per
// occurrence in the bag's (sorted) order. Throws ArgumentError on an empty
// bag.
std::vector<double> AttentionWeights(const ItemBag& bag, const BagTables& tables);

// L2-normalized weighted sum of the bag's embeddings; plain sum when
// `use_attention` is false. Empty bags and zero sums give the zero vector.
std::vector<double> PooledRepresentation(const ItemBag& bag,
                                         const BagTables& tables,
                                         bool use_attention,
                                         PooledTrace* trace = nullptr);

// Full forward pass. Train mode applies inverted dropout to the hidden layer
// using `rng`. Throws ArgumentError if every bag the model uses is empty.
ClassifierOutput Forward(const ClassifierModel& model, const BagPair& bags,
                         ForwardMode mode, std::mt19937_64* rng = nullptr,
                         ForwardTrace* trace = nullptr);

// Balanced weights n_samples / (n_classes * count_c). Throws ArgumentError if
// a count is not positive.
std::vector<double> ClassWeights(std::span<const int64_t> counts);

struct LossAndGradients {
  double loss = 0.0;
  ModelParams gradients;
};

// Mean weighted categorical cross-entropy over the batch and its gradient
// with respect to every parameter tensor. `class_weights` may be empty
// (all ones). Throws NumericalError on a non-finite loss.
LossAndGradients ComputeLossAndGradients(
    std::span<const TrainingExample> batch, const ClassifierModel& model,
    std::span<const double> class_weights, ForwardMode mode,
    std::mt19937_64* rng = nullptr);

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of `params` in place; `first_moment` and
// `second_moment` carry the optimizer state. `step` counts from 1.
void AdamStep(std::span<double> params, std::span<const double> grads,
              std::span<double> first_moment, std::span<double> second_moment,
              const AdamOptions& options, int64_t step);

// Adam over every tensor of a model.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& shape, AdamOptions options);
  void Step(ModelParams& params, const ModelParams& gradients);
  int64_t step() const { return step_; }

 private:
  AdamOptions options_;
  ModelParams first_moment_;
  ModelParams second_moment_;
  int64_t step_ = 0;
};

struct TrainingLog {
  std::vector<double> batch_losses;
  std::vector<double> epoch_losses;
  size_t batches_per_epoch = 0;
  // Examples with no usable items under the configuration.
  size_t skipped_examples = 0;
};

// Seeded mini-batch Adam training. Examples are reshuffled each epoch; the
// last batch of an epoch may be short. The trained parameters are rounded to
// float32 so the model matches its serialized form. Throws ConfigError for
// fewer than two classes or no usable example.
ClassifierModel TrainClassifier(std::span<const TrainingExample> examples,
                                const ClassifierConfig& config,
                                VocabularyPair vocabs,
                                std::vector<std::string> classes,
                                TrainingLog* log = nullptr);

// Logit assigned to a candidate type the model has never seen.
inline constexpr double kMissingClassLogit = -1e9;

struct CandidateOutputs {
  std::vector<double> probs;   // aligned with the candidate list
  std::vector<double> logits;
  std::vector<bool> missing;   // type unknown to the model
  size_t predicted = 0;        // argmax of probs over candidates, first wins
};

// Inference-mode outputs over all classes. Bags may be empty, in which case
// the hidden layer sees a zero input.
ClassifierOutput Predict(const ClassifierModel& model, const BagPair& bags);

// Outputs restricted to `candidates`. Unknown types get probability 0 and
// kMissingClassLogit.
CandidateOutputs PredictCandidates(const ClassifierModel& model,
                                   const BagPair& bags,
                                   std::span<const std::string> candidates);

// Index of the largest probability, first wins.
int ArgMax(std::span<const double> values);

// Fraction of examples whose global argmax equals the label. Throws
// ArgumentError on an empty set.
double EvalAccuracy(const ClassifierModel& model,
                    std::span<const TrainingExample> examples);

// w_a.u_x for every vocabulary item of one bag kind (empty without attention).
std::vector<double> AttentionScores(const BagTables& tables);

}  // namespace triplescore

#endif  // TRIPLESCORE_NEURALNET_H_
