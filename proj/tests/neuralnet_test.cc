#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "nn_testing.h"
#include "triplescore/neuralnet.h"

namespace triplescore {
namespace {

using testing::TinyModel;
using testing::TinySpec;

BagTables AttentionTables(std::vector<double> logits_as_u) {
  BagTables t;
  t.embeddings = Matrix(logits_as_u.size(), 2);
  t.attention = Matrix(logits_as_u.size(), 1);
  for (size_t i = 0; i < logits_as_u.size(); ++i) t.attention(i, 0) = logits_as_u[i];
  t.attention_weight = Matrix(1, 1, 1.0);
  t.attention_bias = Matrix(1, 1, 0.0);
  return t;
}

TEST(AttentionWeights, SingleItem) {
  const auto w = AttentionWeights(ItemBag({0}), AttentionTables({3.7}));
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
}

TEST(AttentionWeights, ZeroWeightVectorIsUniform) {
  BagTables t = AttentionTables({1.0, -2.0, 0.5, 4.0});
  t.attention_weight.Fill(0.0);
  for (const double a : AttentionWeights(ItemBag({0, 1, 2, 3}), t)) {
    EXPECT_DOUBLE_EQ(a, 0.25);
  }
}

TEST(AttentionWeights, HandSoftmax) {
  const auto w = AttentionWeights(ItemBag({0, 1}), AttentionTables({std::log(2.0), 0.0}));
  EXPECT_NEAR(w[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(w[1], 1.0 / 3.0, 1e-12);
}

TEST(PooledRepresentation, PlainSumNormalized) {
  BagTables t = AttentionTables({0.0, 0.0});
  t.embeddings(0, 0) = 1.0;
  t.embeddings(1, 1) = 1.0;
  const auto z = PooledRepresentation(ItemBag({0, 1}), t, false);
  EXPECT_NEAR(z[0], 0.7071067811865476, 1e-12);
  EXPECT_NEAR(z[1], 0.7071067811865476, 1e-12);
}

TEST(PooledRepresentation, WeightedSumNormalized) {
  BagTables t = AttentionTables({std::log(2.0), 0.0});
  t.embeddings(0, 0) = 1.0;
  t.embeddings(1, 1) = 1.0;
  PooledTrace trace;
  const auto z = PooledRepresentation(ItemBag({0, 1}), t, true, &trace);
  EXPECT_NEAR(trace.pooled[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(trace.pooled[1], 1.0 / 3.0, 1e-12);
  // (2, 1) / sqrt(5)
  EXPECT_NEAR(z[0], 0.8944271909999159, 1e-12);
  EXPECT_NEAR(z[1], 0.4472135954999579, 1e-12);
}

TEST(PooledRepresentation, EmptyBagIsZero) {
  const auto z = PooledRepresentation(ItemBag(), AttentionTables({1.0}), true);
  EXPECT_EQ(z, (std::vector<double>{0.0, 0.0}));
}

TEST(Forward, ZeroWeightsGiveUniformProbs) {
  TinySpec spec;
  spec.d_w = 2;
  spec.hidden = 2;
  spec.classes = 2;
  ClassifierModel model = TinyModel(spec);
  for (auto& named : model.params.Tensors()) named.tensor->Fill(0.0);
  BagPair bags{ItemBag({0, 1}), ItemBag({2})};
  const auto out = Forward(model, bags, ForwardMode::kInfer);
  EXPECT_DOUBLE_EQ(out.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(out.probs[1], 0.5);
}

// d_w=2, l=3, C=3, entity bag only. Pinned values; expected probabilities
// worked out by hand: x = (2, 1)/sqrt(5), only hidden unit 0 is active with
// h0 = 2.5/sqrt(5), logits = (h0, 0.5, -h0).
TEST(Forward, PinnedTinyModelMatchesHandComputation) {
  TinySpec spec;
  spec.d_w = 2;
  spec.d_a = 1;
  spec.hidden = 3;
  spec.classes = 3;
  spec.n_entities = 2;
  spec.use_words = false;
  ClassifierModel model = TinyModel(spec);
  auto& e = model.params.entities;
  e.embeddings = Matrix(2, 2);
  e.embeddings(0, 0) = 1.0;
  e.embeddings(1, 1) = 1.0;
  e.attention(0, 0) = std::log(2.0);
  e.attention(1, 0) = 0.0;
  e.attention_weight(0, 0) = 1.0;
  e.attention_bias(0, 0) = 0.0;
  auto& mlp = model.params.mlp;
  const double w1[2][3] = {{1.0, -1.0, 0.5}, {0.5, 1.0, -2.0}};
  const double b1[3] = {0.0, 0.1, 0.2};
  const double w2[3][3] = {{1.0, 0.0, -1.0}, {2.0, 2.0, 2.0}, {0.5, 0.5, 0.5}};
  const double b2[3] = {0.0, 0.5, 0.0};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) mlp.hidden_weights(i, j) = w1[i][j];
  }
  for (int j = 0; j < 3; ++j) {
    mlp.hidden_bias(0, j) = b1[j];
    mlp.output_bias(0, j) = b2[j];
    for (int c = 0; c < 3; ++c) mlp.output_weights(j, c) = w2[j][c];
  }
  const auto out = Forward(model, BagPair{ItemBag(), ItemBag({0, 1})}, ForwardMode::kInfer);
  EXPECT_NEAR(out.logits[0], 1.118033988749895, 1e-12);
  EXPECT_NEAR(out.logits[1], 0.5, 1e-12);
  EXPECT_NEAR(out.probs[0], 0.6075773369434425, 1e-9);
  EXPECT_NEAR(out.probs[1], 0.3274860576057811, 1e-9);
  EXPECT_NEAR(out.probs[2], 0.0649366054507764, 1e-9);
}

TEST(Forward, MatchesNaiveReference) {
  const TinySpec spec;
  const ClassifierModel model = TinyModel(spec);
  for (const auto& ex : testing::TinyBatch(spec, 5, 20)) {
    const auto out = Forward(model, ex.bags, ForwardMode::kInfer);
    const auto ref = testing::NaiveForward(model, ex.bags);
    for (size_t c = 0; c < out.probs.size(); ++c) {
      EXPECT_NEAR(out.probs[c], ref.probs[c], 1e-12);
    }
    EXPECT_NEAR(std::accumulate(out.probs.begin(), out.probs.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Forward, RejectsExampleWithoutUsableItems) {
  TinySpec spec;
  spec.use_words = false;
  const ClassifierModel model = TinyModel(spec);
  EXPECT_THROW(Forward(model, BagPair{ItemBag({1}), ItemBag()}, ForwardMode::kInfer),
               ArgumentError);
  // Predict tolerates it and sees a zero input.
  EXPECT_EQ(Predict(model, BagPair{}).probs.size(), 3u);
}

TEST(ClassWeights, BalancedFormula) {
  const std::vector<int64_t> counts{10, 30};
  const auto w = ClassWeights(counts);
  EXPECT_DOUBLE_EQ(w[0], 2.0);
  EXPECT_NEAR(w[1], 0.6667, 1e-4);
  const std::vector<int64_t> equal{4, 4, 4};
  for (const double v : ClassWeights(equal)) EXPECT_DOUBLE_EQ(v, 1.0);
  const std::vector<int64_t> single{7};
  EXPECT_DOUBLE_EQ(ClassWeights(single)[0], 1.0);
}

TEST(Loss, UniformTwoClassIsLn2) {
  TinySpec spec;
  spec.classes = 2;
  ClassifierModel model = TinyModel(spec);
  for (auto& named : model.params.Tensors()) named.tensor->Fill(0.0);
  model.params.words.embeddings.Fill(0.3);
  model.params.entities.embeddings.Fill(0.3);
  std::vector<TrainingExample> batch{{"x", BagPair{ItemBag({0}), ItemBag({1})}, 0}};
  const auto result = ComputeLossAndGradients(batch, model, {}, ForwardMode::kInfer);
  EXPECT_NEAR(result.loss, 0.6931, 1e-4);
  EXPECT_NEAR(result.loss, std::log(2.0), 1e-12);
}

TEST(Loss, CertainPredictionCostsNothing) {
  TinySpec spec;
  spec.classes = 2;
  ClassifierModel model = TinyModel(spec);
  model.params.mlp.output_weights.Fill(0.0);
  model.params.mlp.output_bias(0, 0) = 800.0;
  model.params.mlp.output_bias(0, 1) = 0.0;
  std::vector<TrainingExample> batch{{"x", BagPair{ItemBag({0}), ItemBag({1})}, 0}};
  EXPECT_EQ(ComputeLossAndGradients(batch, model, {}, ForwardMode::kInfer).loss, 0.0);
}

TEST(Gradients, MatchFiniteDifferences) {
  const TinySpec spec;
  const ClassifierModel model = TinyModel(spec);
  const auto batch = testing::TinyBatch(spec, 3, 6);
  const std::vector<double> weights{1.5, 0.5, 1.0};
  const auto check = testing::CheckGradients(model, batch, weights);
  for (const auto& [name, err] : check.max_relative_error) {
    EXPECT_LT(err, 1e-4) << name;
  }
}

TEST(Gradients, WithoutAttentionOrWords) {
  TinySpec spec;
  spec.use_words = false;
  spec.use_attention = false;
  const ClassifierModel model = TinyModel(spec);
  const auto batch = testing::TinyBatch(spec, 4, 5);
  EXPECT_LT(testing::CheckGradients(model, batch, {}).overall, 1e-4);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  std::vector<double> params{1.0, -2.0};
  std::vector<double> grads{0.0, 0.0};
  std::vector<double> m(2, 0.0);
  std::vector<double> v(2, 0.0);
  AdamStep(params, grads, m, v, AdamOptions{}, 1);
  EXPECT_EQ(params, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> params{1.0};
  std::vector<double> grads{1.0};
  std::vector<double> m{0.0};
  std::vector<double> v{0.0};
  AdamStep(params, grads, m, v, AdamOptions{}, 1);
  EXPECT_NEAR(params[0], 0.999, 1e-7);
  // m_hat = 1, v_hat = 1: delta = 0.001 / (1 + 1e-8)
  EXPECT_NEAR(params[0], 1.0 - 0.001 / (1.0 + 1e-8), 1e-15);
}

std::vector<TrainingExample> SeparableExamples(int n, int classes, uint64_t seed) {
  // Class c owns word ids [4c, 4c + 4); every example draws three of them.
  Gen gen(seed);
  std::vector<TrainingExample> out;
  for (int i = 0; i < n; ++i) {
    const int c = i % classes;
    std::vector<int32_t> ids;
    for (int k = 0; k < 3; ++k) ids.push_back(4 * c + gen.Int(0, 3));
    out.push_back({"x" + std::to_string(i), BagPair{ItemBag(ids), ItemBag({c})}, c});
  }
  return out;
}

ClassifierConfig SmallConfig() {
  ClassifierConfig config;
  config.embedding_dim = 8;
  config.attention_dim = 4;
  config.hidden_units = 16;
  config.batch_size = 10;
  config.epochs = 5;
  config.learning_rate = 0.01;
  config.seed = 3;
  return config;
}

TEST(Train, BatchesPerEpochAndDeterminism) {
  auto examples = SeparableExamples(250, 5, 1);
  ClassifierConfig config = SmallConfig();
  config.batch_size = 100;
  config.epochs = 1;
  VocabularyPair vocabs{testing::NumberedVocab("w", 20), testing::NumberedVocab("E", 5)};
  std::vector<std::string> classes{"A", "B", "C", "D", "E"};
  TrainingLog log_a;
  TrainingLog log_b;
  const auto a = TrainClassifier(examples, config, vocabs, classes, &log_a);
  const auto b = TrainClassifier(examples, config, vocabs, classes, &log_b);
  EXPECT_EQ(log_a.batches_per_epoch, 3u);
  EXPECT_EQ(log_a.batch_losses.size(), 3u);
  EXPECT_EQ(log_a.epoch_losses, log_b.epoch_losses);
  EXPECT_EQ(a.Serialize(), b.Serialize());
}

TEST(Train, LearnsSeparableTask) {
  const auto examples = SeparableExamples(200, 5, 2);
  VocabularyPair vocabs{testing::NumberedVocab("w", 20), testing::NumberedVocab("E", 5)};
  const auto model = TrainClassifier(examples, SmallConfig(), vocabs,
                                     {"A", "B", "C", "D", "E"});
  EXPECT_GE(EvalAccuracy(model, examples), 0.95);
}

TEST(Train, NeedsTwoClasses) {
  const auto examples = SeparableExamples(10, 1, 2);
  VocabularyPair vocabs{testing::NumberedVocab("w", 20), testing::NumberedVocab("E", 5)};
  EXPECT_THROW(TrainClassifier(examples, SmallConfig(), vocabs, {"A"}), ConfigError);
}

TEST(PredictCandidates, RestrictedArgmaxAndMissingTypes) {
  TinySpec spec;
  ClassifierModel model = TinyModel(spec);
  model.params.mlp.output_weights.Fill(0.0);
  model.params.mlp.output_bias(0, 0) = std::log(0.7);
  model.params.mlp.output_bias(0, 1) = std::log(0.2);
  model.params.mlp.output_bias(0, 2) = std::log(0.1);
  const BagPair bags{ItemBag({0}), ItemBag({0})};
  const std::vector<std::string> subset{"T1", "T0"};
  const auto out = PredictCandidates(model, bags, subset);
  EXPECT_EQ(out.predicted, 1u);
  EXPECT_NEAR(out.probs[1], 0.7, 1e-12);

  const std::vector<std::string> all{"T0", "T1", "T2"};
  EXPECT_EQ(PredictCandidates(model, bags, all).predicted, 0u);

  const std::vector<std::string> with_unknown{"Nope", "T2"};
  const auto missing = PredictCandidates(model, bags, with_unknown);
  EXPECT_TRUE(missing.missing[0]);
  EXPECT_EQ(missing.probs[0], 0.0);
  EXPECT_EQ(missing.logits[0], kMissingClassLogit);
  EXPECT_EQ(missing.predicted, 1u);
}

TEST(EvalAccuracy, CountsCorrect) {
  TinySpec spec;
  spec.classes = 2;
  ClassifierModel model = TinyModel(spec);
  model.params.mlp.output_weights.Fill(0.0);
  model.params.mlp.output_bias(0, 0) = 1.0;
  const BagPair bags{ItemBag({0}), ItemBag({0})};
  std::vector<TrainingExample> examples{
      {"a", bags, 0}, {"b", bags, 0}, {"c", bags, 0}, {"d", bags, 1}};
  EXPECT_DOUBLE_EQ(EvalAccuracy(model, examples), 0.75);
  examples.pop_back();
  EXPECT_DOUBLE_EQ(EvalAccuracy(model, examples), 1.0);
}

TEST(ConfigurationRow, RowFiveIsEntitiesWithAttention) {
  const auto row = ConfigurationRow(5);
  EXPECT_EQ(row.corpus_kind, CorpusKind::kArticle);
  EXPECT_FALSE(row.use_words);
  EXPECT_TRUE(row.use_attention);
  EXPECT_FALSE(row.use_class_weights);
  EXPECT_THROW(ConfigurationRow(17), ArgumentError);
  const ClassifierConfig defaults;
  EXPECT_EQ(defaults.embedding_dim, 300);
  EXPECT_EQ(defaults.attention_dim, 10);
  EXPECT_EQ(defaults.hidden_units, 2000);
  EXPECT_EQ(defaults.batch_size, 100);
  EXPECT_EQ(defaults.epochs, 1);
  EXPECT_DOUBLE_EQ(defaults.dropout, 0.5);
}

TEST(Serialization, RoundTripIsBitwise) {
  TinySpec spec;
  ClassifierModel model = TinyModel(spec);
  model.RoundToFloat32();
  const auto restored = ClassifierModel::Deserialize(model.Serialize());
  EXPECT_EQ(restored.classes, model.classes);
  EXPECT_TRUE(restored.vocabs.words == model.vocabs.words);
  for (const auto& ex : testing::TinyBatch(spec, 9, 10)) {
    const auto a = Predict(model, ex.bags);
    const auto b = Predict(restored, ex.bags);
    EXPECT_EQ(a.logits, b.logits);
    EXPECT_EQ(a.probs, b.probs);
  }
  EXPECT_THROW(ClassifierModel::Deserialize("garbage"), InputError);
}

}  // namespace
}  // namespace triplescore
