#ifndef TRIPLESCORE_CORPUS_H_
#define TRIPLESCORE_CORPUS_H_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "triplescore/error.h"

namespace triplescore {

enum class CorpusKind { kArticle, kSentence };

std::string_view CorpusKindName(CorpusKind kind);
CorpusKind ParseCorpusKind(std::string_view name);

struct CorpusConfig {
  CorpusKind kind = CorpusKind::kArticle;
  // Context tokens taken on each side of a target anchor (sentence corpora).
  int window_m = 5;
  int min_count = 5;

  void Validate() const;
};

// Dense, frequency-thresholded item dictionary. Ids are assigned by
// descending count, ties by byte-wise item order, so they depend only on the
// counted corpus.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary FromCounts(const std::map<std::string, int64_t>& counts,
                               int min_count);
  // Rebuilds a vocabulary from (item, count) rows in id order, e.g. after
  // deserialization. Rows must be distinct.
  static Vocabulary FromRows(std::vector<std::pair<std::string, int64_t>> rows,
                             int min_count);

  int size() const { return static_cast<int>(items_.size()); }
  bool empty() const { return items_.empty(); }
  int min_count() const { return min_count_; }

  std::optional<int32_t> Find(std::string_view item) const;
  const std::string& item(int32_t id) const { return items_.at(id); }
  int64_t count(int32_t id) const { return counts_.at(id); }

  // "item<TAB>count" per line, id order, preceded by `header` comment lines.
  std::string ToTsv(std::span<const std::string> header = {}) const;
  static Vocabulary FromTsv(const std::filesystem::path& path, int min_count);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.items_ == b.items_ && a.counts_ == b.counts_ &&
           a.min_count_ == b.min_count_;
  }

 private:
  std::vector<std::string> items_;
  std::vector<int64_t> counts_;
  std::map<std::string, int32_t, std::less<>> index_;
  int min_count_ = 1;
};

struct VocabularyPair {
  Vocabulary words;
  Vocabulary entities;
};

// Multiset of vocabulary ids. Ids are kept sorted ascending, which fixes the
// summation order of every pooled representation.
class ItemBag {
 public:
  ItemBag() = default;
  explicit ItemBag(std::vector<int32_t> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
  }

  std::span<const int32_t> ids() const { return ids_; }
  size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  void Merge(const ItemBag& other);
  // Multiplicity of `id` in the bag.
  int Count(int32_t id) const;

  friend bool operator==(const ItemBag&, const ItemBag&) = default;

 private:
  std::vector<int32_t> ids_;
};

struct BagPair {
  ItemBag words;
  ItemBag entities;

  bool empty() const { return words.empty() && entities.empty(); }
};

struct Anchor {
  std::string entity;
  // Half-open token range of the surface text inside AnnotatedText::tokens.
  size_t token_begin = 0;
  size_t token_end = 0;
};

struct AnnotatedText {
  std::vector<std::string> tokens;
  std::vector<Anchor> anchors;
};

// Lowercases ASCII and splits on whitespace and ASCII punctuation. Bytes
// >= 0x80 are kept as word characters so UTF-8 sequences survive intact.
std::vector<std::string> Tokenize(std::string_view text);

// Parses "[[Entity|surface text]]" anchors ("[[Entity]]" uses the entity name
// as its surface). Throws ArgumentError on an unterminated or empty anchor.
AnnotatedText ParseAnnotatedText(std::string_view text);

struct ArticleDocument {
  std::string entity;
  AnnotatedText text;
};

// Article corpus: one "entity<TAB>annotated text" document per line.
std::vector<ArticleDocument> LoadArticleCorpus(const std::filesystem::path& path);
// Sentence corpus: one annotated sentence per line.
std::vector<AnnotatedText> LoadSentenceCorpus(const std::filesystem::path& path);

// Counts raw tokens and anchor referents, then applies the min_count
// threshold (inclusive) to both.
VocabularyPair BuildVocabularies(std::span<const AnnotatedText> texts,
                                 int min_count);
VocabularyPair BuildVocabularies(std::span<const ArticleDocument> articles,
                                 int min_count);

// All in-vocabulary tokens and anchor referents of an article, with
// multiplicity. Out-of-vocabulary items are dropped.
BagPair ExtractArticleBags(const AnnotatedText& article,
                           const VocabularyPair& vocabs);

// Context bags for `target` in one sentence. Each occurrence of an anchor to
// `target` contributes the in-vocabulary tokens among the `window_m`
// positions on either side; tokens inside any target anchor are skipped.
// The entity bag holds every other anchor's referent. Throws NotFoundError
// if the sentence has no anchor to `target`.
BagPair ExtractSentenceBags(const AnnotatedText& sentence,
                            std::string_view target, int window_m,
                            const VocabularyPair& vocabs);

// Per-entity bags over a whole corpus (bags of repeated documents or of
// several sentences are merged).
std::map<std::string, BagPair> CollectArticleBags(
    std::span<const ArticleDocument> articles, const VocabularyPair& vocabs);
std::map<std::string, BagPair> CollectSentenceBags(
    std::span<const AnnotatedText> sentences, int window_m,
    const VocabularyPair& vocabs);

struct KbPair {
  std::string entity;
  std::string type_name;
};

// "entity<TAB>type" per line.
std::vector<KbPair> LoadKbTypes(const std::filesystem::path& path);

struct LabeledEntity {
  std::string entity;
  int label = 0;
};

struct SingleTypeEntities {
  // Sorted label space; LabeledEntity::label indexes into it.
  std::vector<std::string> classes;
  std::vector<LabeledEntity> entities;
};

// Keeps entities that carry exactly one distinct type. Throws ConfigError if
// none remain.
SingleTypeEntities LoadSingleTypeEntities(std::span<const KbPair> pairs);

// entity -> sorted distinct types.
std::map<std::string, std::vector<std::string>> GroupKbTypes(
    std::span<const KbPair> pairs);

struct TrainingExample {
  std::string entity;
  BagPair bags;
  int label = 0;
};

// Joins labeled entities with their bags. Entities without any in-vocabulary
// item are skipped; `skipped` receives their number when non-null.
std::vector<TrainingExample> BuildTrainingExamples(
    const SingleTypeEntities& labeled,
    const std::map<std::string, BagPair>& bags, size_t* skipped = nullptr);

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> eval;
};

// Seeded random holdout. The eval part holds round(fraction * n) elements;
// both parts keep the input order.
template <typename T>
Split<T> SplitHoldout(std::span<const T> items, double fraction,
                      uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ArgumentError("holdout fraction must lie in (0, 1)");
  }
  const size_t n = items.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto eval_size = static_cast<size_t>(std::llround(fraction * n));
  std::vector<bool> in_eval(n, false);
  for (size_t i = 0; i < eval_size; ++i) in_eval[order[i]] = true;
  Split<T> split;
  for (size_t i = 0; i < n; ++i) {
    (in_eval[i] ? split.eval : split.train).push_back(items[i]);
  }
  return split;
}

inline constexpr int kMinScore = 0;
inline constexpr int kMaxScore = 7;

struct ScoredTriple {
  std::string entity;
  std::string type_name;
  int score = 0;

  friend bool operator==(const ScoredTriple&, const ScoredTriple&) = default;
};

// "entity<TAB>type<TAB>score" per line; blank and "#" lines are skipped. Throws
// ParseError naming the line for malformed rows or scores outside [0, 7].
std::vector<ScoredTriple> ParseScoredTriples(std::span<const std::string> lines,
                                             const std::string& source);
std::vector<ScoredTriple> LoadScoredTriples(const std::filesystem::path& path);

struct CandidateSet {
  std::string entity;
  // Valid types in first-appearance order.
  std::vector<std::string> valid_types;

  // Index of `type_name` in valid_types, if present.
  std::optional<size_t> IndexOf(std::string_view type_name) const;
};

// Groups triples by entity in first-appearance order. Throws ArgumentError
// on a repeated (entity, type) pair.
std::vector<CandidateSet> GroupCandidates(std::span<const ScoredTriple> triples);

}  // namespace triplescore

#endif  // TRIPLESCORE_CORPUS_H_
