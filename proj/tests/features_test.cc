#include <gtest/gtest.h>

#include <cmath>

#include "nn_testing.h"
#include "test_util.h"
#include "triplescore/features.h"
#include "triplescore/util.h"

namespace triplescore {
namespace {

PmiTable WorkedTable() {
  const std::vector<std::vector<std::string>> sets{{"A", "B"}, {"A", "B"}, {"C"}, {"A", "C"}};
  return PmiTable::Build(sets);
}

TEST(Pmi, WorkedExample) {
  const PmiTable table = WorkedTable();
  EXPECT_EQ(table.n_entities(), 4);
  EXPECT_EQ(table.TypeCount("A"), 3);
  EXPECT_EQ(table.PairCount("B", "A"), 2);
  // ln(4 * 2 / (3 * 2))
  EXPECT_NEAR(*table.Lookup("A", "B"), 0.2877, 1e-4);
  EXPECT_DOUBLE_EQ(*table.Lookup("B", "A"), std::log(8.0 / 6.0));
}

TEST(Pmi, IndependencePairIsZero) {
  const std::vector<std::vector<std::string>> sets{{"A", "B"}, {"A"}, {"B"}, {"C"}};
  EXPECT_DOUBLE_EQ(*PmiTable::Build(sets).Lookup("A", "B"), 0.0);
}

TEST(Pmi, NeverCooccurringUsesFloor) {
  const PmiTable table = WorkedTable();
  EXPECT_FALSE(table.Lookup("B", "C").has_value());
  EXPECT_EQ(PmiFeature(table, "B", "C"), -10.0);
  EXPECT_EQ(PmiFeature(table, "B", "B"), 0.0);
  EXPECT_NEAR(PmiFeature(table, "A", "B"), 0.2877, 1e-4);
  EXPECT_THROW(PmiTable::Build(std::vector<std::vector<std::string>>{}), ArgumentError);
}

TEST(Pmi, TsvRoundTrip) {
  const PmiTable table = WorkedTable();
  TempDir dir;
  WriteFile(dir.path() / "pmi.tsv", table.ToTsv());
  const PmiTable loaded = PmiTable::FromTsv(dir.path() / "pmi.tsv");
  EXPECT_EQ(loaded.pair_scores(), table.pair_scores());
  EXPECT_EQ(loaded.n_entities(), 4);
}

CandidateOutputs Outputs(std::vector<double> probs, std::vector<double> logits) {
  CandidateOutputs out;
  out.probs = std::move(probs);
  out.logits = std::move(logits);
  out.missing.assign(out.probs.size(), false);
  out.predicted = static_cast<size_t>(ArgMax(out.probs));
  return out;
}

TEST(OutputFeatures, MinMaxDifferences) {
  const auto out = Outputs({0.7, 0.2, 0.1}, {2.0, 0.5, -1.0});
  const auto f = ClassifierOutputFeatures(out, 1);
  ASSERT_EQ(f.size(), 6u);
  EXPECT_DOUBLE_EQ(f[0], 0.2);
  EXPECT_NEAR(f[1], 0.1, 1e-15);
  EXPECT_NEAR(f[2], 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(f[3], 0.5);
  EXPECT_DOUBLE_EQ(f[4], 1.5);
  EXPECT_DOUBLE_EQ(f[5], 1.5);
  // Predicted type: max-difference features vanish.
  const auto top = ClassifierOutputFeatures(out, 0);
  EXPECT_EQ(top[2], 0.0);
  EXPECT_EQ(top[5], 0.0);
}

TEST(OutputFeatures, SingleCandidate) {
  const auto f = ClassifierOutputFeatures(Outputs({1.0}, {0.3}), 0);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_EQ(f[2], 0.0);
  EXPECT_EQ(f[4], 0.0);
  EXPECT_EQ(f[5], 0.0);
}

TEST(Schema, WidthAndOrder) {
  std::vector<std::string> sixteen;
  for (int i = 1; i <= 16; ++i) sixteen.push_back(std::to_string(i));
  EXPECT_EQ(FeatureSchema(sixteen).size(), 113u);
  const std::vector<std::string> one{"5"};
  const auto schema = FeatureSchema(one);
  ASSERT_EQ(schema.size(), 8u);
  EXPECT_EQ(schema.front(), "c5.prob");
  EXPECT_EQ(schema[6], "c5.pmi");
  EXPECT_EQ(schema.back(), "n_valid_types");
  EXPECT_NE(SchemaDigest(schema), SchemaDigest(FeatureSchema(sixteen)));
}

TEST(Assemble, WidthPmiAndDeterminism) {
  testing::TinySpec spec;
  spec.classes = 3;
  ClassifierRegistry registry;
  registry.Add("1", testing::TinyModel(spec));
  spec.seed = 12;
  registry.Add("2", testing::TinyModel(spec));
  EXPECT_THROW(registry.Add("1", testing::TinyModel(spec)), ArgumentError);

  const std::vector<std::vector<std::string>> sets{{"T0", "T1"}, {"T0"}, {"T1", "T2"}};
  const PmiTable pmi = PmiTable::Build(sets);
  const CandidateSet candidates{"e", {"T0", "T1", "T2"}};
  const std::vector<BagPair> bags(2, BagPair{ItemBag({0, 1}), ItemBag({2})});
  const auto outputs = EntityOutputs(registry, bags, candidates);
  for (size_t t = 0; t < 3; ++t) {
    const auto a = AssembleFeatures(outputs, candidates, t, pmi);
    const auto b = AssembleFeatures(EntityOutputs(registry, bags, candidates), candidates, t, pmi);
    ASSERT_EQ(a.size(), 15u);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.back(), 3.0);
    const std::string& predicted = candidates.valid_types[outputs[0].predicted];
    EXPECT_EQ(a[6], PmiFeature(pmi, candidates.valid_types[t], predicted));
  }
}

TEST(FeatureTable, TsvRoundTrip) {
  FeatureTable table;
  table.schema = FeatureSchema(std::vector<std::string>{"1"});
  table.matrix = FeatureMatrix(0, table.schema.size());
  for (int r = 0; r < 3; ++r) {
    table.entities.push_back("e" + std::to_string(r));
    table.types.push_back("T");
    std::vector<double> row(table.schema.size(), 0.1 * r + 1.0 / 3.0);
    table.matrix.AppendRow(row);
    table.scores.push_back(r);
  }
  TempDir dir;
  WriteFile(dir.path() / "f.tsv", table.ToTsv());
  const FeatureTable loaded = FeatureTable::FromTsv(dir.path() / "f.tsv");
  EXPECT_EQ(loaded.schema, table.schema);
  EXPECT_EQ(loaded.scores, table.scores);
  EXPECT_TRUE(loaded.matrix == table.matrix);
  EXPECT_EQ(loaded.digest(), table.digest());
}

}  // namespace
}  // namespace triplescore
