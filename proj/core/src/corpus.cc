#include "triplescore/corpus.h"

#include <cctype>
#include <set>

#include "triplescore/util.h"

namespace triplescore {

std::string_view CorpusKindName(CorpusKind kind) {
  return kind == CorpusKind::kArticle ? "article" : "sentence";
}

CorpusKind ParseCorpusKind(std::string_view name) {
  if (name == "article") return CorpusKind::kArticle;
  if (name == "sentence") return CorpusKind::kSentence;
  throw ArgumentError("unknown corpus kind '" + std::string(name) + "'");
}

void CorpusConfig::Validate() const {
  if (window_m < 1) throw ArgumentError("window_m must be >= 1");
  if (min_count < 1) throw ArgumentError("min_count must be >= 1");
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::FromCounts(const std::map<std::string, int64_t>& counts,
                                  int min_count) {
  if (min_count < 1) throw ArgumentError("min_count must be >= 1");
  std::vector<std::pair<std::string, int64_t>> rows;
  for (const auto& [item, count] : counts) {
    if (count >= min_count) rows.emplace_back(item, count);
  }
  // std::map iteration is already in item order, so a stable sort by count
  // leaves equal counts in item order.
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return FromRows(std::move(rows), min_count);
}

Vocabulary Vocabulary::FromRows(
    std::vector<std::pair<std::string, int64_t>> rows, int min_count) {
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  vocab.items_.reserve(rows.size());
  vocab.counts_.reserve(rows.size());
  for (auto& [item, count] : rows) {
    const auto id = static_cast<int32_t>(vocab.items_.size());
    if (!vocab.index_.emplace(item, id).second) {
      throw ArgumentError("duplicate vocabulary item '" + item + "'");
    }
    vocab.items_.push_back(std::move(item));
    vocab.counts_.push_back(count);
  }
  return vocab;
}

std::optional<int32_t> Vocabulary::Find(std::string_view item) const {
  const auto it = index_.find(item);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::ToTsv(std::span<const std::string> header) const {
  std::string out;
  for (const auto& line : header) out += "# " + line + "\n";
  for (size_t i = 0; i < items_.size(); ++i) {
    out += items_[i];
    out += '\t';
    out += std::to_string(counts_[i]);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::FromTsv(const std::filesystem::path& path,
                               int min_count) {
  const auto lines = ReadLines(path);
  std::vector<std::pair<std::string, int64_t>> rows;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 2 || fields[0].empty()) {
      throw ParseError(path.string(), static_cast<int>(i + 1),
                       "expected item<TAB>count");
    }
    try {
      rows.emplace_back(std::string(fields[0]), ParseInt(fields[1]));
    } catch (const ArgumentError& e) {
      throw ParseError(path.string(), static_cast<int>(i + 1), e.what());
    }
  }
  return FromRows(std::move(rows), min_count);
}

// ---------------------------------------------------------------------------
// ItemBag

void ItemBag::Merge(const ItemBag& other) {
  std::vector<int32_t> merged;
  merged.reserve(ids_.size() + other.ids_.size());
  std::merge(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
             std::back_inserter(merged));
  ids_ = std::move(merged);
}

int ItemBag::Count(int32_t id) const {
  const auto [lo, hi] = std::equal_range(ids_.begin(), ids_.end(), id);
  return static_cast<int>(hi - lo);
}

// ---------------------------------------------------------------------------
// Text

namespace {

bool IsWordByte(unsigned char c) {
  return c >= 0x80 || std::isalnum(c) != 0;
}

void AppendTokens(std::string_view text, std::vector<std::string>& out) {
  std::string current;
  for (const unsigned char c : text) {
    if (IsWordByte(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  AppendTokens(text, tokens);
  return tokens;
}

AnnotatedText ParseAnnotatedText(std::string_view text) {
  AnnotatedText parsed;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t open = text.find("[[", pos);
    if (open == std::string_view::npos) {
      AppendTokens(text.substr(pos), parsed.tokens);
      break;
    }
    AppendTokens(text.substr(pos, open - pos), parsed.tokens);
    const size_t close = text.find("]]", open + 2);
    if (close == std::string_view::npos) {
      throw ArgumentError("unterminated anchor at offset " +
                          std::to_string(open));
    }
    const std::string_view body = text.substr(open + 2, close - open - 2);
    const size_t bar = body.find('|');
    const std::string_view entity =
        bar == std::string_view::npos ? body : body.substr(0, bar);
    const std::string_view surface =
        bar == std::string_view::npos ? body : body.substr(bar + 1);
    if (entity.empty()) {
      throw ArgumentError("anchor without entity at offset " +
                          std::to_string(open));
    }
    Anchor anchor;
    anchor.entity = std::string(entity);
    anchor.token_begin = parsed.tokens.size();
    AppendTokens(surface, parsed.tokens);
    anchor.token_end = parsed.tokens.size();
    parsed.anchors.push_back(std::move(anchor));
    pos = close + 2;
  }
  return parsed;
}

std::vector<ArticleDocument> LoadArticleCorpus(
    const std::filesystem::path& path) {
  const auto lines = ReadLines(path);
  std::vector<ArticleDocument> docs;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const size_t tab = lines[i].find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(path.string(), static_cast<int>(i + 1),
                       "expected entity<TAB>text");
    }
    ArticleDocument doc;
    doc.entity = lines[i].substr(0, tab);
    try {
      doc.text = ParseAnnotatedText(std::string_view(lines[i]).substr(tab + 1));
    } catch (const ArgumentError& e) {
      throw ParseError(path.string(), static_cast<int>(i + 1), e.what());
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<AnnotatedText> LoadSentenceCorpus(
    const std::filesystem::path& path) {
  const auto lines = ReadLines(path);
  std::vector<AnnotatedText> sentences;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      sentences.push_back(ParseAnnotatedText(lines[i]));
    } catch (const ArgumentError& e) {
      throw ParseError(path.string(), static_cast<int>(i + 1), e.what());
    }
  }
  return sentences;
}

VocabularyPair BuildVocabularies(std::span<const AnnotatedText> texts,
                                 int min_count) {
  std::map<std::string, int64_t> word_counts;
  std::map<std::string, int64_t> entity_counts;
  for (const auto& text : texts) {
    for (const auto& token : text.tokens) ++word_counts[token];
    for (const auto& anchor : text.anchors) ++entity_counts[anchor.entity];
  }
  return {Vocabulary::FromCounts(word_counts, min_count),
          Vocabulary::FromCounts(entity_counts, min_count)};
}

VocabularyPair BuildVocabularies(std::span<const ArticleDocument> articles,
                                 int min_count) {
  std::vector<AnnotatedText> texts;
  texts.reserve(articles.size());
  for (const auto& doc : articles) texts.push_back(doc.text);
  return BuildVocabularies(std::span<const AnnotatedText>(texts), min_count);
}

// ---------------------------------------------------------------------------
// Bag extraction

BagPair ExtractArticleBags(const AnnotatedText& article,
                           const VocabularyPair& vocabs) {
  std::vector<int32_t> words;
  std::vector<int32_t> entities;
  for (const auto& token : article.tokens) {
    if (const auto id = vocabs.words.Find(token)) words.push_back(*id);
  }
  for (const auto& anchor : article.anchors) {
    if (const auto id = vocabs.entities.Find(anchor.entity)) {
      entities.push_back(*id);
    }
  }
  return {ItemBag(std::move(words)), ItemBag(std::move(entities))};
}

BagPair ExtractSentenceBags(const AnnotatedText& sentence,
                            std::string_view target, int window_m,
                            const VocabularyPair& vocabs) {
  if (window_m < 1) throw ArgumentError("window_m must be >= 1");
  const size_t n = sentence.tokens.size();
  std::vector<bool> inside_target(n, false);
  bool found = false;
  for (const auto& anchor : sentence.anchors) {
    if (anchor.entity != target) continue;
    found = true;
    for (size_t i = anchor.token_begin; i < anchor.token_end; ++i) {
      inside_target[i] = true;
    }
  }
  if (!found) {
    throw NotFoundError("sentence has no anchor to '" + std::string(target) +
                        "'");
  }

  const auto window = static_cast<size_t>(window_m);
  std::vector<int32_t> words;
  auto take = [&](size_t i) {
    if (inside_target[i]) return;
    if (const auto id = vocabs.words.Find(sentence.tokens[i])) {
      words.push_back(*id);
    }
  };
  std::vector<int32_t> entities;
  for (const auto& anchor : sentence.anchors) {
    if (anchor.entity != target) {
      if (const auto id = vocabs.entities.Find(anchor.entity)) {
        entities.push_back(*id);
      }
      continue;
    }
    const size_t left = anchor.token_begin >= window ? anchor.token_begin - window : 0;
    for (size_t i = left; i < anchor.token_begin; ++i) take(i);
    const size_t right = std::min(n, anchor.token_end + window);
    for (size_t i = anchor.token_end; i < right; ++i) take(i);
  }
  return {ItemBag(std::move(words)), ItemBag(std::move(entities))};
}

std::map<std::string, BagPair> CollectArticleBags(
    std::span<const ArticleDocument> articles, const VocabularyPair& vocabs) {
  std::map<std::string, BagPair> bags;
  for (const auto& doc : articles) {
    const BagPair extracted = ExtractArticleBags(doc.text, vocabs);
    BagPair& slot = bags[doc.entity];
    slot.words.Merge(extracted.words);
    slot.entities.Merge(extracted.entities);
  }
  return bags;
}

std::map<std::string, BagPair> CollectSentenceBags(
    std::span<const AnnotatedText> sentences, int window_m,
    const VocabularyPair& vocabs) {
  std::map<std::string, BagPair> bags;
  for (const auto& sentence : sentences) {
    std::set<std::string_view> targets;
    for (const auto& anchor : sentence.anchors) targets.insert(anchor.entity);
    for (const auto target : targets) {
      const BagPair extracted =
          ExtractSentenceBags(sentence, target, window_m, vocabs);
      BagPair& slot = bags[std::string(target)];
      slot.words.Merge(extracted.words);
      slot.entities.Merge(extracted.entities);
    }
  }
  return bags;
}

// ---------------------------------------------------------------------------
// Knowledge base

std::vector<KbPair> LoadKbTypes(const std::filesystem::path& path) {
  const auto lines = ReadLines(path);
  std::vector<KbPair> pairs;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto fields = SplitTabs(lines[i]);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(path.string(), static_cast<int>(i + 1),
                       "expected entity<TAB>type");
    }
    pairs.push_back({std::string(fields[0]), std::string(fields[1])});
  }
  return pairs;
}

std::map<std::string, std::vector<std::string>> GroupKbTypes(
    std::span<const KbPair> pairs) {
  std::map<std::string, std::set<std::string>> sets;
  for (const auto& pair : pairs) sets[pair.entity].insert(pair.type_name);
  std::map<std::string, std::vector<std::string>> grouped;
  for (auto& [entity, types] : sets) {
    grouped.emplace(entity, std::vector<std::string>(types.begin(), types.end()));
  }
  return grouped;
}

SingleTypeEntities LoadSingleTypeEntities(std::span<const KbPair> pairs) {
  const auto grouped = GroupKbTypes(pairs);
  std::set<std::string> classes;
  for (const auto& [entity, types] : grouped) {
    if (types.size() == 1) classes.insert(types.front());
  }
  if (classes.empty()) {
    throw ConfigError("no single-type entities to train on");
  }
  SingleTypeEntities result;
  result.classes.assign(classes.begin(), classes.end());
  for (const auto& [entity, types] : grouped) {
    if (types.size() != 1) continue;
    const auto it = std::lower_bound(result.classes.begin(),
                                     result.classes.end(), types.front());
    result.entities.push_back(
        {entity, static_cast<int>(it - result.classes.begin())});
  }
  return result;
}

std::vector<TrainingExample> BuildTrainingExamples(
    const SingleTypeEntities& labeled,
    const std::map<std::string, BagPair>& bags, size_t* skipped) {
  std::vector<TrainingExample> examples;
  size_t missing = 0;
  for (const auto& entity : labeled.entities) {
    const auto it = bags.find(entity.entity);
    if (it == bags.end() || it->second.empty()) {
      ++missing;
      continue;
    }
    examples.push_back({entity.entity, it->second, entity.label});
  }
  if (skipped != nullptr) *skipped = missing;
  return examples;
}

// ---------------------------------------------------------------------------
// Scored triples

std::vector<ScoredTriple> ParseScoredTriples(std::span<const std::string> lines,
                                             const std::string& source) {
  std::vector<ScoredTriple> triples;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const int line_no = static_cast<int>(i + 1);
    const auto fields = SplitTabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(source, line_no, "expected entity<TAB>type<TAB>score");
    }
    int64_t score = 0;
    try {
      score = ParseInt(fields[2]);
    } catch (const ArgumentError& e) {
      throw ParseError(source, line_no, e.what());
    }
    if (score < kMinScore || score > kMaxScore) {
      throw ParseError(source, line_no,
                       "score " + std::to_string(score) + " outside [0, 7]");
    }
    triples.push_back({std::string(fields[0]), std::string(fields[1]),
                       static_cast<int>(score)});
  }
  return triples;
}

std::vector<ScoredTriple> LoadScoredTriples(const std::filesystem::path& path) {
  return ParseScoredTriples(ReadLines(path), path.string());
}

std::optional<size_t> CandidateSet::IndexOf(std::string_view type_name) const {
  for (size_t i = 0; i < valid_types.size(); ++i) {
    if (valid_types[i] == type_name) return i;
  }
  return std::nullopt;
}

std::vector<CandidateSet> GroupCandidates(
    std::span<const ScoredTriple> triples) {
  std::vector<CandidateSet> groups;
  std::map<std::string, size_t, std::less<>> position;
  for (const auto& triple : triples) {
    auto [it, inserted] = position.emplace(triple.entity, groups.size());
    if (inserted) groups.push_back({triple.entity, {}});
    CandidateSet& group = groups[it->second];
    if (group.IndexOf(triple.type_name)) {
      throw ArgumentError("duplicate pair (" + triple.entity + ", " +
                          triple.type_name + ")");
    }
    group.valid_types.push_back(triple.type_name);
  }
  return groups;
}

}  // namespace triplescore
