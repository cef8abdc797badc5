#include <gtest/gtest.h>

#include <cmath>

#include "gbrt_testing.h"
#include "triplescore/gbrt.h"

namespace triplescore {
namespace {

using testing::ToMatrix;

GbrtConfig Config(int n_trees, double lr, int depth) {
  GbrtConfig config;
  config.n_trees = n_trees;
  config.learning_rate = lr;
  config.max_depth = depth;
  return config;
}

TEST(Relabel, Thresholds) {
  EXPECT_EQ(RelabelScore(2), false);
  EXPECT_EQ(RelabelScore(5), true);
  EXPECT_FALSE(RelabelScore(3).has_value());
  EXPECT_FALSE(RelabelScore(4).has_value());
  const std::vector<ScoredTriple> triples{{"e", "a", 0}, {"e", "b", 3}, {"e", "c", 7}};
  const auto relabeled = RelabelBinary(triples);
  ASSERT_EQ(relabeled.size(), 2u);
  EXPECT_EQ(relabeled[0].source_index, 0u);
  EXPECT_FALSE(relabeled[0].label);
  EXPECT_EQ(relabeled[1].source_index, 2u);
  EXPECT_TRUE(relabeled[1].label);
}

TEST(FitTree, DepthZeroIsMean) {
  const auto x = ToMatrix({{1.0}, {2.0}, {3.0}});
  const std::vector<double> y{1.0, 2.0, 6.0};
  const auto tree = FitTree(x, y, Config(1, 1.0, 0));
  ASSERT_EQ(tree.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].value, 3.0);
}

TEST(FitTree, ConstantTargetsStayLeaf) {
  const auto x = ToMatrix({{1.0, 5.0}, {2.0, 4.0}, {3.0, 3.0}});
  const std::vector<double> y{2.0, 2.0, 2.0};
  EXPECT_EQ(FitTree(x, y, Config(1, 1.0, 3)).nodes().size(), 1u);
}

TEST(FitTree, PerfectSplitOnFeatureZero) {
  const auto x = ToMatrix({{0.0, 3.0}, {1.0, 1.0}, {5.0, 2.0}, {6.0, 0.0}});
  const std::vector<double> y{0.0, 0.0, 7.0, 7.0};
  const auto tree = FitTree(x, y, Config(1, 1.0, 1));
  ASSERT_EQ(tree.nodes().size(), 3u);
  EXPECT_EQ(tree.nodes()[0].feature, 0);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 3.0);
  EXPECT_DOUBLE_EQ(tree.Predict(std::vector<double>{0.5, 9.0}), 0.0);
  EXPECT_DOUBLE_EQ(tree.Predict(std::vector<double>{5.5, 9.0}), 7.0);
}

TEST(FitTree, RootMatchesBruteForceOracle) {
  Gen gen(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto set = testing::RandomToySet(gen, gen.Int(2, 10), gen.Int(1, 3), 4);
    std::vector<size_t> rows(set.y.size());
    std::iota(rows.begin(), rows.end(), size_t{0});
    const auto oracle = testing::BruteForceSplit(set.x, set.y, rows, 1);
    const auto tree = FitTree(ToMatrix(set.x), set.y, Config(1, 1.0, 1));
    const auto& root = tree.nodes()[0];
    ASSERT_EQ(!root.is_leaf(), oracle.found) << "trial " << trial;
    if (oracle.found) {
      EXPECT_EQ(root.feature, oracle.feature) << "trial " << trial;
      EXPECT_NEAR(root.threshold, oracle.threshold, 1e-12) << "trial " << trial;
    }
  }
}

TEST(FitTree, MinSamplesLeaf) {
  const auto x = ToMatrix({{0.0}, {1.0}, {2.0}, {3.0}});
  const std::vector<double> y{9.0, 0.0, 0.0, 0.0};
  GbrtConfig config = Config(1, 1.0, 1);
  config.min_samples_leaf = 2;
  const auto tree = FitTree(x, y, config);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 1.5);
}

TEST(FitRegression, SingleStumpOfDepthZeroPredictsMean) {
  const auto x = ToMatrix({{0.0}, {1.0}, {2.0}, {3.0}});
  const std::vector<double> y{1.0, 2.0, 3.0, 10.0};
  const auto model = FitRegression(x, y, Config(1, 1.0, 0));
  for (size_t r = 0; r < x.rows(); ++r) EXPECT_DOUBLE_EQ(model.PredictRaw(x.row(r)), 4.0);
}

TEST(FitRegression, StageMseNonIncreasing) {
  Gen gen(8);
  const auto set = testing::RandomToySet(gen, 40, 3, 20);
  std::vector<double> mse;
  FitRegression(ToMatrix(set.x), set.y, Config(50, 0.3, 2), &mse);
  ASSERT_EQ(mse.size(), 51u);
  for (size_t k = 1; k < mse.size(); ++k) EXPECT_LE(mse[k], mse[k - 1] + 1e-12);
}

TEST(FitRegression, EightRowToyMatchesNaiveOracle) {
  const std::vector<std::vector<double>> x{{1, 8}, {2, 7}, {3, 3}, {4, 6},
                                           {5, 2}, {6, 5}, {7, 1}, {8, 4}};
  const std::vector<double> y{0, 1, 3, 2, 5, 4, 7, 6};
  const auto model = FitRegression(ToMatrix(x), y, Config(3, 0.5, 1));
  const auto oracle = testing::NaiveBoosting(x, y, 3, 0.5, 1, 1, x);
  for (size_t r = 0; r < x.size(); ++r) {
    EXPECT_NEAR(model.PredictRaw(x[r]), oracle[r], 1e-9);
  }
}

TEST(PredictRaw, EmptyAndSingleStump) {
  GbrtEnsemble ensemble;
  ensemble.base_score = 2.5;
  ensemble.n_features = 1;
  ensemble.config.learning_rate = 0.5;
  const std::vector<double> x{0.0};
  EXPECT_EQ(ensemble.PredictRaw(x), 2.5);
  ensemble.trees.push_back(RegressionTree({RegressionTree::Node{-1, 0.0, -1, -1, 3.0}}));
  EXPECT_DOUBLE_EQ(ensemble.PredictRaw(x), 2.5 + 0.5 * 3.0);
  EXPECT_THROW(ensemble.PredictRaw(std::vector<double>{1.0, 2.0}), ArgumentError);
}

TEST(FitBinary, LogOddsBase) {
  const auto x = ToMatrix({{0.0}, {1.0}, {2.0}, {3.0}});
  const std::vector<bool> labels{true, true, true, false};
  const auto model = FitBinary(x, labels, Config(1, 0.1, 1));
  EXPECT_NEAR(model.base_score, 1.0986, 1e-4);
  EXPECT_DOUBLE_EQ(model.base_score, std::log(3.0));
}

TEST(FitBinary, SeparableWithinTenStages) {
  const auto x = ToMatrix({{0.1, 0.9}, {0.2, 0.8}, {0.3, 0.7}, {0.4, 0.2},
                           {0.6, 0.3}, {0.7, 0.1}, {0.8, 0.6}, {0.9, 0.4}});
  const std::vector<bool> labels{false, false, false, false, true, true, true, true};
  const auto model = FitBinary(x, labels, Config(10, 0.5, 2));
  for (size_t r = 0; r < x.rows(); ++r) {
    EXPECT_EQ(Sigmoid(model.PredictRaw(x.row(r))) >= 0.5, labels[r]);
  }
}

TEST(FitBinary, NeedsBothClasses) {
  const auto x = ToMatrix({{0.0}, {1.0}});
  EXPECT_THROW(FitBinary(x, {true, true}, Config(1, 0.1, 1)), ConfigError);
}

TEST(PredictScore, RoundingAndMapping) {
  EXPECT_EQ(RoundScore(3.4), 3);
  EXPECT_EQ(RoundScore(7.8), 7);
  EXPECT_EQ(RoundScore(3.5), 4);
  EXPECT_EQ(RoundScore(-0.6), 0);
  EXPECT_EQ(BinaryScore(2.1), 5);
  EXPECT_EQ(BinaryScore(0.0), 5);
  EXPECT_EQ(BinaryScore(-0.1), 2);
}

TEST(GbrtConfig, Validation) {
  GbrtConfig config;
  EXPECT_NO_THROW(config.Validate());
  config.subsample = 0.0;
  EXPECT_THROW(config.Validate(), ArgumentError);
  config = GbrtConfig{};
  config.n_trees = 0;
  EXPECT_THROW(config.Validate(), ArgumentError);
}

TEST(Serialization, RoundTripPredictsBitwise) {
  Gen gen(4);
  const auto set = testing::RandomToySet(gen, 30, 4, 50);
  GbrtConfig config = Config(20, 0.2, 3);
  config.subsample = 0.8;
  config.seed = 0xfeedfacecafebeefULL;
  const auto model = FitRegression(ToMatrix(set.x), set.y, config);
  const auto restored = GbrtEnsemble::Deserialize(model.Serialize());
  EXPECT_TRUE(restored == model);
  for (const auto& row : set.x) EXPECT_EQ(restored.PredictRaw(row), model.PredictRaw(row));
  EXPECT_THROW(GbrtEnsemble::Deserialize("triplescore-gbrt 1\nmode nonsense\n"), ParseError);
}

}  // namespace
}  // namespace triplescore
