#ifndef TRIPLESCORE_TESTS_NN_TESTING_H_
#define TRIPLESCORE_TESTS_NN_TESTING_H_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "test_util.h"
#include "triplescore/corpus.h"
#include "triplescore/neuralnet.h"

namespace triplescore::testing {

struct TinySpec {
  int d_w = 4;
  int d_a = 3;
  int hidden = 8;
  int classes = 3;
  int n_words = 6;
  int n_entities = 5;
  bool use_words = true;
  bool use_attention = true;
  double init_scale = 0.5;
  uint64_t seed = 11;
};

inline Vocabulary NumberedVocab(const std::string& prefix, int n) {
  std::map<std::string, int64_t> counts;
  for (int i = 0; i < n; ++i) counts[prefix + std::to_string(i)] = 100 - i;
  return Vocabulary::FromCounts(counts, 1);
}

inline ClassifierModel TinyModel(const TinySpec& spec) {
  ClassifierConfig config;
  config.embedding_dim = spec.d_w;
  config.attention_dim = spec.d_a;
  config.hidden_units = spec.hidden;
  config.use_words = spec.use_words;
  config.use_attention = spec.use_attention;
  config.dropout = 0.0;
  config.init_scale = spec.init_scale;
  config.seed = spec.seed;
  std::vector<std::string> classes;
  for (int c = 0; c < spec.classes; ++c) classes.push_back("T" + std::to_string(c));
  return ClassifierModel::Initialize(
      config, {NumberedVocab("w", spec.n_words), NumberedVocab("E", spec.n_entities)},
      classes);
}

inline ItemBag RandomBag(Gen& gen, int vocab_size, int min_items, int max_items) {
  std::vector<int32_t> ids;
  const int n = gen.Int(min_items, max_items);
  for (int i = 0; i < n; ++i) ids.push_back(gen.Int(0, vocab_size - 1));
  return ItemBag(ids);
}

// Straight-line reference forward pass written independently of the library.
struct NaiveOutput {
  std::vector<double> logits;
  std::vector<double> probs;
};

inline std::vector<double> NaivePool(const ItemBag& bag, const BagTables& t,
                                     bool attention, size_t dim) {
  std::vector<double> c(dim, 0.0);
  const auto ids = bag.ids();
  if (ids.empty()) return c;
  std::vector<double> a(ids.size(), 1.0);
  if (attention) {
    std::vector<double> s(ids.size());
    for (size_t i = 0; i < ids.size(); ++i) {
      double dot = t.attention_bias(0, 0);
      for (size_t k = 0; k < t.attention.cols(); ++k) {
        dot += t.attention_weight(0, k) * t.attention(ids[i], k);
      }
      s[i] = dot;
    }
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (size_t i = 0; i < s.size(); ++i) z += std::exp(s[i] - top);
    for (size_t i = 0; i < s.size(); ++i) a[i] = std::exp(s[i] - top) / z;
  }
  for (size_t i = 0; i < ids.size(); ++i) {
    for (size_t k = 0; k < dim; ++k) c[k] += a[i] * t.embeddings(ids[i], k);
  }
  double norm = 0.0;
  for (const double v : c) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) return c;
  for (double& v : c) v /= norm;
  return c;
}

inline NaiveOutput NaiveForward(const ClassifierModel& m, const BagPair& bags) {
  const auto dim = static_cast<size_t>(m.config.embedding_dim);
  std::vector<double> x;
  if (m.config.use_words) {
    const auto w = NaivePool(bags.words, m.params.words, m.config.use_attention, dim);
    x.insert(x.end(), w.begin(), w.end());
  }
  const auto e = NaivePool(bags.entities, m.params.entities, m.config.use_attention, dim);
  x.insert(x.end(), e.begin(), e.end());
  const auto& p = m.params.mlp;
  std::vector<double> h(p.hidden_bias.cols());
  for (size_t j = 0; j < h.size(); ++j) {
    double sum = p.hidden_bias(0, j);
    for (size_t i = 0; i < x.size(); ++i) sum += x[i] * p.hidden_weights(i, j);
    h[j] = sum > 0.0 ? sum : 0.0;
  }
  NaiveOutput out;
  out.logits.resize(p.output_bias.cols());
  for (size_t c = 0; c < out.logits.size(); ++c) {
    double sum = p.output_bias(0, c);
    for (size_t j = 0; j < h.size(); ++j) sum += h[j] * p.output_weights(j, c);
    out.logits[c] = sum;
  }
  const double top = *std::max_element(out.logits.begin(), out.logits.end());
  double z = 0.0;
  for (const double l : out.logits) z += std::exp(l - top);
  for (const double l : out.logits) out.probs.push_back(std::exp(l - top) / z);
  return out;
}

// Mean weighted cross-entropy from the naive forward pass.
inline double NaiveLoss(const ClassifierModel& m, std::span<const TrainingExample> batch,
                        std::span<const double> weights) {
  double total = 0.0;
  for (const auto& ex : batch) {
    const auto out = NaiveForward(m, ex.bags);
    const double w = weights.empty() ? 1.0 : weights[ex.label];
    total += -w * std::log(out.probs[ex.label]);
  }
  return total / static_cast<double>(batch.size());
}

struct GradientCheck {
  std::map<std::string, double> max_relative_error;  // per tensor
  double overall = 0.0;
  size_t n_checked = 0;
};

// Central finite differences of NaiveLoss against the analytic gradients.
// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradientCheck CheckGradients(const ClassifierModel& model,
                                    std::span<const TrainingExample> batch,
                                    std::span<const double> weights, double h = 1e-4,
                                    double floor = 1e-6) {
  const auto analytic =
      ComputeLossAndGradients(batch, model, weights, ForwardMode::kInfer);
  ClassifierModel probe = model;
  auto probe_tensors = probe.params.Tensors();
  const auto grad_tensors = analytic.gradients.Tensors();
  GradientCheck result;
  for (size_t t = 0; t < probe_tensors.size(); ++t) {
    auto values = probe_tensors[t].tensor->values();
    const auto grads = grad_tensors[t].tensor->values();
    double worst = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = NaiveLoss(probe, batch, weights);
      values[i] = saved - h;
      const double down = NaiveLoss(probe, batch, weights);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(grads[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(grads[i] - numeric) / denom);
      ++result.n_checked;
    }
    result.max_relative_error[std::string(probe_tensors[t].name)] = worst;
    result.overall = std::max(result.overall, worst);
  }
  return result;
}

// Batch on the tiny model: every example uses several items of both kinds.
inline std::vector<TrainingExample> TinyBatch(const TinySpec& spec, uint64_t seed,
                                              int n) {
  Gen gen(seed);
  std::vector<TrainingExample> batch;
  for (int i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.entity = "x" + std::to_string(i);
    ex.bags.words = RandomBag(gen, spec.n_words, 2, 5);
    ex.bags.entities = RandomBag(gen, spec.n_entities, 2, 4);
    ex.label = i % spec.classes;
    batch.push_back(ex);
  }
  return batch;
}

}  // namespace triplescore::testing

#endif  // TRIPLESCORE_TESTS_NN_TESTING_H_
