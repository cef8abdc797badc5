#include "triplescore/gbrt.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "triplescore/util.h"

// Ensemble text container, one record per line:
//
//   triplescore-gbrt 1
//   mode regression|binary
//   config n_trees=.. learning_rate=.. max_depth=.. min_samples_leaf=.. subsample=.. seed=..
//   n_features <int>
//   base_score <double>
//   trees <count>
//   tree <node count>
//   <feature> <threshold> <left> <right> <value>     (one line per node)
//   ...
//
// Leaves carry feature -1, left/right -1.

namespace triplescore {

void FeatureMatrix::AppendRow(std::span<const double> row) {
  if (rows_ == 0 && values_.empty()) cols_ = row.size();
  if (row.size() != cols_) throw ArgumentError("feature row width mismatch");
  values_.insert(values_.end(), row.begin(), row.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::SelectColumns(std::span<const size_t> columns) const {
  FeatureMatrix out(rows_, columns.size());
  for (const size_t c : columns) {
    if (c >= cols_) throw ArgumentError("column index out of range");
  }
  for (size_t r = 0; r < rows_; ++r) {
    for (size_t j = 0; j < columns.size(); ++j) out(r, j) = (*this)(r, columns[j]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::SelectRows(std::span<const size_t> rows) const {
  FeatureMatrix out(rows.size(), cols_);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw ArgumentError("row index out of range");
    for (size_t c = 0; c < cols_; ++c) out(i, c) = (*this)(rows[i], c);
  }
  return out;
}

void GbrtConfig::Validate() const {
  if (n_trees < 1) throw ArgumentError("n_trees must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ArgumentError("learning_rate must lie in (0, 1]");
  }
  if (max_depth < 0) throw ArgumentError("max_depth must be >= 0");
  if (min_samples_leaf < 1) throw ArgumentError("min_samples_leaf must be >= 1");
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw ArgumentError("subsample must lie in (0, 1]");
  }
}

std::string GbrtConfig::ToString() const {
  std::ostringstream out;
  out << "n_trees=" << n_trees << " learning_rate=" << FormatDouble(learning_rate)
      << " max_depth=" << max_depth << " min_samples_leaf=" << min_samples_leaf
      << " subsample=" << FormatDouble(subsample) << " seed=" << seed;
  return out.str();
}

// ---------------------------------------------------------------------------
// Trees

int RegressionTree::LeafIndex(std::span<const double> x) const {
  if (nodes_.empty()) throw ArgumentError("empty tree");
  int index = 0;
  while (!nodes_[index].is_leaf()) {
    const Node& node = nodes_[index];
    index = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return index;
}

double RegressionTree::Predict(std::span<const double> x) const {
  return nodes_[LeafIndex(x)].value;
}

int RegressionTree::Depth() const {
  std::function<int(int)> depth = [&](int index) -> int {
    const Node& node = nodes_[index];
    if (node.is_leaf()) return 0;
    return 1 + std::max(depth(node.left), depth(node.right));
  };
  return nodes_.empty() ? 0 : depth(0);
}

namespace {

constexpr double kGainTolerance = 1e-12;

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> targets,
              const GbrtConfig& config)
      : x_(x), targets_(targets), config_(config) {}

  RegressionTree Build(std::vector<size_t> rows) {
    Grow(std::move(rows), 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  double Mean(const std::vector<size_t>& rows) const {
    double sum = 0.0;
    for (const size_t r : rows) sum += targets_[r];
    return sum / static_cast<double>(rows.size());
  }

  SplitChoice BestSplit(const std::vector<size_t>& rows, double mean) const {
    SplitChoice best;
    const size_t n = rows.size();
    const auto min_leaf = static_cast<size_t>(config_.min_samples_leaf);
    if (n < 2 * min_leaf) return best;
    // Centered targets keep the gain arithmetic well conditioned.
    double total = 0.0;
    for (const size_t r : rows) total += targets_[r] - mean;
    const double parent = total * total / static_cast<double>(n);

    std::vector<size_t> order(rows);
    for (size_t f = 0; f < x_.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return x_(a, f) < x_(b, f);
      });
      double left_sum = 0.0;
      for (size_t i = 0; i + 1 < n; ++i) {
        left_sum += targets_[order[i]] - mean;
        const double lo = x_(order[i], f);
        const double hi = x_(order[i + 1], f);
        if (!(lo < hi)) continue;
        const size_t n_left = i + 1;
        const size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n_right) -
                            parent;
        // Near-equal gains count as ties so the earliest candidate wins
        // regardless of rounding in the running sums.
        if (gain > best.gain + kGainTolerance * std::max(1.0, best.gain)) {
          best.found = true;
          best.feature = static_cast<int>(f);
          best.threshold = lo + (hi - lo) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  int Grow(std::vector<size_t> rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const double mean = Mean(rows);
    nodes_[index].value = mean;

    if (depth >= config_.max_depth) return index;
    const auto [lo, hi] = std::minmax_element(
        rows.begin(), rows.end(),
        [&](size_t a, size_t b) { return targets_[a] < targets_[b]; });
    if (targets_[*lo] == targets_[*hi]) return index;

    const SplitChoice split = BestSplit(rows, mean);
    if (!split.found) return index;

    std::vector<size_t> left;
    std::vector<size_t> right;
    for (const size_t r : rows) {
      (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[index].feature = split.feature;
    nodes_[index].threshold = split.threshold;
    const int left_index = Grow(std::move(left), depth + 1);
    nodes_[index].left = left_index;
    const int right_index = Grow(std::move(right), depth + 1);
    nodes_[index].right = right_index;
    return index;
  }

  const FeatureMatrix& x_;
  std::span<const double> targets_;
  const GbrtConfig& config_;
  std::vector<RegressionTree::Node> nodes_;
};

}  // namespace

RegressionTree FitTree(const FeatureMatrix& x, std::span<const double> targets,
                       const GbrtConfig& config, std::span<const size_t> rows) {
  if (x.rows() == 0) throw ArgumentError("cannot fit a tree to zero rows");
  if (targets.size() != x.rows()) {
    throw ArgumentError("target count does not match row count");
  }
  if (config.max_depth < 0) throw ArgumentError("max_depth must be >= 0");
  if (config.min_samples_leaf < 1) {
    throw ArgumentError("min_samples_leaf must be >= 1");
  }
  for (const double t : targets) {
    if (!std::isfinite(t)) throw ArgumentError("non-finite tree target");
  }
  std::vector<size_t> selected;
  if (rows.empty()) {
    selected.resize(x.rows());
    std::iota(selected.begin(), selected.end(), size_t{0});
  } else {
    selected.assign(rows.begin(), rows.end());
  }
  return TreeBuilder(x, targets, config).Build(std::move(selected));
}

// ---------------------------------------------------------------------------
// Boosting

std::string_view ScorerModeName(ScorerMode mode) {
  return mode == ScorerMode::kRegression ? "regression" : "binary";
}

ScorerMode ParseScorerMode(std::string_view name) {
  if (name == "regression") return ScorerMode::kRegression;
  if (name == "binary") return ScorerMode::kBinary;
  throw ArgumentError("unknown scorer mode '" + std::string(name) + "'");
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int RoundScore(double raw) {
  const double rounded = std::round(raw);
  if (!(rounded >= kMinScore)) return kMinScore;
  if (rounded > kMaxScore) return kMaxScore;
  return static_cast<int>(rounded);
}

int BinaryScore(double raw) { return Sigmoid(raw) >= 0.5 ? 5 : 2; }

double GbrtEnsemble::PredictRaw(std::span<const double> x) const {
  if (x.size() != n_features) {
    throw ArgumentError("feature vector has width " + std::to_string(x.size()) +
                        ", ensemble expects " + std::to_string(n_features));
  }
  double raw = base_score;
  for (const auto& tree : trees) raw += config.learning_rate * tree.Predict(x);
  return raw;
}

int GbrtEnsemble::PredictScore(std::span<const double> x) const {
  const double raw = PredictRaw(x);
  return mode == ScorerMode::kRegression ? RoundScore(raw) : BinaryScore(raw);
}

namespace {

std::vector<size_t> StageRows(size_t n, double subsample, std::mt19937_64& rng) {
  std::vector<size_t> rows(n);
  std::iota(rows.begin(), rows.end(), size_t{0});
  if (subsample >= 1.0) return rows;
  const auto take = std::max<size_t>(
      1, static_cast<size_t>(std::llround(subsample * static_cast<double>(n))));
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(take);
  std::sort(rows.begin(), rows.end());
  return rows;
}

void CheckData(const FeatureMatrix& x, size_t n_targets) {
  if (x.rows() == 0) throw ArgumentError("cannot boost on zero rows");
  if (n_targets != x.rows()) {
    throw ArgumentError("target count does not match row count");
  }
}

}  // namespace

GbrtEnsemble FitRegression(const FeatureMatrix& x, std::span<const double> y,
                           const GbrtConfig& config,
                           std::vector<double>* stage_mse) {
  config.Validate();
  CheckData(x, y.size());
  GbrtEnsemble ensemble;
  ensemble.mode = ScorerMode::kRegression;
  ensemble.config = config;
  ensemble.n_features = x.cols();
  const size_t n = x.rows();
  ensemble.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> raw(n, ensemble.base_score);
  std::vector<double> residuals(n);
  std::mt19937_64 rng(config.seed);
  auto mse = [&] {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) total += (y[i] - raw[i]) * (y[i] - raw[i]);
    return total / static_cast<double>(n);
  };
  if (stage_mse != nullptr) {
    stage_mse->clear();
    stage_mse->push_back(mse());
  }
  for (int stage = 0; stage < config.n_trees; ++stage) {
    for (size_t i = 0; i < n; ++i) residuals[i] = y[i] - raw[i];
    const auto rows = StageRows(n, config.subsample, rng);
    RegressionTree tree = FitTree(x, residuals, config, rows);
    for (size_t i = 0; i < n; ++i) {
      raw[i] += config.learning_rate * tree.Predict(x.row(i));
    }
    ensemble.trees.push_back(std::move(tree));
    if (stage_mse != nullptr) stage_mse->push_back(mse());
  }
  return ensemble;
}

GbrtEnsemble FitBinary(const FeatureMatrix& x, const std::vector<bool>& labels,
                       const GbrtConfig& config) {
  config.Validate();
  CheckData(x, labels.size());
  const size_t n = x.rows();
  const auto positives =
      static_cast<size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0 || positives == n) {
    throw ConfigError("binary scorer needs both classes in the training data");
  }
  GbrtEnsemble ensemble;
  ensemble.mode = ScorerMode::kBinary;
  ensemble.config = config;
  ensemble.n_features = x.cols();
  ensemble.base_score = std::log(static_cast<double>(positives) /
                                 static_cast<double>(n - positives));

  std::vector<double> raw(n, ensemble.base_score);
  std::vector<double> residuals(n);
  std::vector<double> hessians(n);
  std::mt19937_64 rng(config.seed);
  for (int stage = 0; stage < config.n_trees; ++stage) {
    for (size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(raw[i]);
      residuals[i] = (labels[i] ? 1.0 : 0.0) - p;
      hessians[i] = p * (1.0 - p);
    }
    const auto rows = StageRows(n, config.subsample, rng);
    RegressionTree tree = FitTree(x, residuals, config, rows);

    auto& nodes = tree.mutable_nodes();
    std::vector<double> numerator(nodes.size(), 0.0);
    std::vector<double> denominator(nodes.size(), 0.0);
    for (const size_t r : rows) {
      const int leaf = tree.LeafIndex(x.row(r));
      numerator[leaf] += residuals[r];
      denominator[leaf] += hessians[r];
    }
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i].is_leaf()) continue;
      nodes[i].value = denominator[i] > 1e-12 ? numerator[i] / denominator[i] : 0.0;
    }
    for (size_t i = 0; i < n; ++i) {
      raw[i] += config.learning_rate * tree.Predict(x.row(i));
    }
    ensemble.trees.push_back(std::move(tree));
  }
  return ensemble;
}

std::optional<bool> RelabelScore(int score) {
  if (score <= 2) return false;
  if (score >= 5) return true;
  return std::nullopt;
}

std::vector<BinaryExample> RelabelBinary(std::span<const ScoredTriple> triples) {
  std::vector<BinaryExample> out;
  for (size_t i = 0; i < triples.size(); ++i) {
    if (const auto label = RelabelScore(triples[i].score)) out.push_back({i, *label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string GbrtEnsemble::Serialize() const {
  std::ostringstream out;
  out << "triplescore-gbrt 1\n";
  out << "mode " << ScorerModeName(mode) << "\n";
  out << "config " << config.ToString() << "\n";
  out << "n_features " << n_features << "\n";
  out << "base_score " << FormatDouble(base_score) << "\n";
  out << "trees " << trees.size() << "\n";
  for (const auto& tree : trees) {
    out << "tree " << tree.nodes().size() << "\n";
    for (const auto& node : tree.nodes()) {
      out << node.feature << ' ' << FormatDouble(node.threshold) << ' '
          << node.left << ' ' << node.right << ' ' << FormatDouble(node.value)
          << "\n";
    }
  }
  return out.str();
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::vector<std::string_view> Next() {
    if (pos_ >= text_.size()) {
      throw ParseError("gbrt", line_ + 1, "unexpected end of ensemble");
    }
    size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    const std::string_view line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (start < line.size()) {
      size_t space = line.find(' ', start);
      if (space == std::string_view::npos) space = line.size();
      if (space > start) fields.push_back(line.substr(start, space - start));
      start = space + 1;
    }
    return fields;
  }

  // Fields of the next line, which must start with `key` and hold `count`
  // values after it.
  std::vector<std::string_view> Expect(std::string_view key, size_t count) {
    auto fields = Next();
    if (fields.size() != count + 1 || fields[0] != key) {
      throw ParseError("gbrt", line_, "expected '" + std::string(key) + "'");
    }
    fields.erase(fields.begin());
    return fields;
  }

  bool AtEnd() const { return pos_ >= text_.size(); }
  int line() const { return line_; }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 0;
};

std::string_view ConfigValue(std::string_view field, std::string_view key) {
  if (field.substr(0, key.size()) != key || field.size() <= key.size() ||
      field[key.size()] != '=') {
    throw ParseError("gbrt", 3, "expected config key '" + std::string(key) + "'");
  }
  return field.substr(key.size() + 1);
}

}  // namespace

GbrtEnsemble GbrtEnsemble::Deserialize(std::string_view text) {
  LineReader reader(text);
  GbrtEnsemble ensemble;
  try {
    const auto version = reader.Expect("triplescore-gbrt", 1);
    if (version[0] != "1") throw ParseError("gbrt", 1, "unsupported version");
    ensemble.mode = ParseScorerMode(reader.Expect("mode", 1)[0]);
    const auto cfg = reader.Expect("config", 6);
    ensemble.config.n_trees = static_cast<int>(ParseInt(ConfigValue(cfg[0], "n_trees")));
    ensemble.config.learning_rate = ParseDouble(ConfigValue(cfg[1], "learning_rate"));
    ensemble.config.max_depth = static_cast<int>(ParseInt(ConfigValue(cfg[2], "max_depth")));
    ensemble.config.min_samples_leaf =
        static_cast<int>(ParseInt(ConfigValue(cfg[3], "min_samples_leaf")));
    ensemble.config.subsample = ParseDouble(ConfigValue(cfg[4], "subsample"));
    ensemble.config.seed = ParseUint64(ConfigValue(cfg[5], "seed"));
    ensemble.n_features = static_cast<size_t>(ParseInt(reader.Expect("n_features", 1)[0]));
    ensemble.base_score = ParseDouble(reader.Expect("base_score", 1)[0]);
    const auto n_trees = ParseInt(reader.Expect("trees", 1)[0]);
    for (int64_t t = 0; t < n_trees; ++t) {
      const auto n_nodes = ParseInt(reader.Expect("tree", 1)[0]);
      std::vector<RegressionTree::Node> nodes;
      for (int64_t i = 0; i < n_nodes; ++i) {
        const auto fields = reader.Next();
        if (fields.size() != 5) {
          throw ParseError("gbrt", reader.line(), "expected 5 node fields");
        }
        RegressionTree::Node node;
        node.feature = static_cast<int>(ParseInt(fields[0]));
        node.threshold = ParseDouble(fields[1]);
        node.left = static_cast<int>(ParseInt(fields[2]));
        node.right = static_cast<int>(ParseInt(fields[3]));
        node.value = ParseDouble(fields[4]);
        const bool children_ok =
            node.is_leaf() ||
            (node.left > i && node.left < n_nodes && node.right > i &&
             node.right < n_nodes &&
             static_cast<size_t>(node.feature) < ensemble.n_features);
        if (!children_ok) {
          throw ParseError("gbrt", reader.line(), "invalid node links");
        }
        nodes.push_back(node);
      }
      ensemble.trees.emplace_back(std::move(nodes));
    }
  } catch (const ArgumentError& e) {
    throw ParseError("gbrt", reader.line(), e.what());
  }
  return ensemble;
}

void GbrtEnsemble::Save(const std::filesystem::path& path) const {
  WriteFile(path, Serialize());
}

GbrtEnsemble GbrtEnsemble::Load(const std::filesystem::path& path) {
  std::string text;
  for (const auto& line : ReadLines(path)) {
    text += line;
    text += '\n';
  }
  return Deserialize(text);
}

}  // namespace triplescore
