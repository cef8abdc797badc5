#include "triplescore/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "triplescore/corpus.h"
#include "triplescore/error.h"
#include "triplescore/util.h"

namespace triplescore {

void SynthSpec::Validate() const {
  if (n_types < 2) throw ArgumentError("synthetic data needs at least 2 types");
  if (n_single < n_types) throw ArgumentError("need at least one entity per type");
  if (n_scored < 0) throw ArgumentError("n_scored must be >= 0");
  if (signature_words < 1 || signature_entities < 1) {
    throw ArgumentError("signature sizes must be >= 1");
  }
  if (generic_words < 1 || generic_entities < 1) {
    throw ArgumentError("generic vocabulary sizes must be >= 1");
  }
  if (article_tokens < 1 || article_anchors < 0 || sentences_per_entity < 1) {
    throw ArgumentError("invalid document sizes");
  }
  if (!(signature_rate > 0.0 && signature_rate < 1.0)) {
    throw ArgumentError("signature_rate must lie in (0, 1)");
  }
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw ArgumentError("eval_fraction must lie in (0, 1)");
  }
}

namespace {

constexpr const char* kProfessions[] = {
    "Actor",     "Singer",   "Politician", "Lawyer",    "Writer",
    "Painter",   "Physicist", "Economist", "Architect", "Composer",
    "Engineer",  "Journalist", "Botanist", "Drummer",   "Athlete"};
constexpr const char* kNationalities[] = {
    "Japan",   "France",  "Germany", "Brazil", "Canada", "India", "Kenya",
    "Norway",  "Peru",    "Spain",   "Egypt",  "Chile",  "Italy", "Mexico"};

std::string Pad(int value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<size_t>(width) - digits.size(), '0');
  }
  return digits;
}

std::string TypeName(const SynthSpec& spec, int t) {
  const bool nationality = spec.domain == "nationality";
  const size_t pool = nationality ? std::size(kNationalities) : std::size(kProfessions);
  const char* base = nationality ? kNationalities[t % pool] : kProfessions[t % pool];
  const int cycle = t / static_cast<int>(pool);
  return cycle == 0 ? std::string(base) : std::string(base) + std::to_string(cycle + 1);
}

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(spec.seed) {
    for (int t = 0; t < spec.n_types; ++t) {
      types_.push_back(TypeName(spec, t));
      std::vector<std::string> words;
      std::vector<std::string> entities;
      for (int k = 0; k < spec.signature_words; ++k) {
        words.push_back("s" + Pad(t, 2) + "w" + Pad(k, 2));
      }
      for (int k = 0; k < spec.signature_entities; ++k) {
        entities.push_back("Sig_" + types_.back() + "_" + Pad(k, 2));
      }
      planted_.words[types_.back()] = std::move(words);
      planted_.entities[types_.back()] = std::move(entities);
    }
    for (int k = 0; k < spec.generic_words; ++k) {
      planted_.generic_words.push_back("g" + Pad(k, 3));
    }
    for (int k = 0; k < spec.generic_entities; ++k) {
      planted_.generic_entities.push_back("Topic_" + Pad(k, 3));
    }
  }

  struct Entity {
    std::string name;
    std::vector<int> types;
    std::vector<double> weights;  // sums to 1
  };

  void Run(const std::filesystem::path& out_dir, SynthPaths& paths) {
    std::vector<Entity> singles;
    for (int i = 0; i < spec_.n_single; ++i) {
      // Round-robin base assignment keeps every type populated, a skew
      // toward low type ids makes class weighting meaningful.
      int t = i % spec_.n_types;
      if (Uniform() < 0.3) t = UniformInt(0, (spec_.n_types - 1) / 2);
      singles.push_back({"E" + Pad(i + 1, 4), {t}, {1.0}});
    }
    std::vector<Entity> scored;
    for (int i = 0; i < spec_.n_scored; ++i) scored.push_back(MultiTypeEntity(i));

    std::ostringstream articles;
    std::ostringstream kb;
    std::vector<std::string> sentences;
    for (const auto* group : {&singles, &scored}) {
      for (const Entity& entity : *group) {
        articles << entity.name << '\t' << Article(entity) << '\n';
        for (const int t : entity.types) kb << entity.name << '\t' << types_[t] << '\n';
        for (int s = 0; s < spec_.sentences_per_entity; ++s) {
          sentences.push_back(Sentence(entity));
        }
      }
    }
    std::shuffle(sentences.begin(), sentences.end(), rng_);
    std::string sentence_text;
    for (const auto& line : sentences) sentence_text += line + "\n";

    std::vector<size_t> order(scored.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    const auto n_eval = static_cast<size_t>(
        std::llround(spec_.eval_fraction * static_cast<double>(scored.size())));
    std::vector<bool> is_eval(scored.size(), false);
    for (size_t i = 0; i < n_eval; ++i) is_eval[order[i]] = true;
    std::ostringstream train;
    std::ostringstream eval;
    for (size_t i = 0; i < scored.size(); ++i) {
      const Entity& entity = scored[i];
      const double top = *std::max_element(entity.weights.begin(), entity.weights.end());
      for (size_t k = 0; k < entity.types.size(); ++k) {
        int score = static_cast<int>(std::lround(7.0 * entity.weights[k] / top));
        if (Uniform() < 0.2) score += Uniform() < 0.5 ? -1 : 1;
        score = std::clamp(score, kMinScore, kMaxScore);
        (is_eval[i] ? eval : train)
            << entity.name << '\t' << types_[entity.types[k]] << '\t' << score << '\n';
      }
    }

    std::ostringstream planted;
    for (const auto& type_name : types_) {
      for (const auto& w : planted_.words.at(type_name)) {
        planted << type_name << "\tword\t" << w << '\n';
      }
      for (const auto& e : planted_.entities.at(type_name)) {
        planted << type_name << "\tentity\t" << e << '\n';
      }
    }
    for (const auto& w : planted_.generic_words) planted << "-\tword\t" << w << '\n';
    for (const auto& e : planted_.generic_entities) planted << "-\tentity\t" << e << '\n';

    paths.articles = out_dir / "articles.txt";
    paths.sentences = out_dir / "sentences.txt";
    paths.kb_types = out_dir / "kb_types.tsv";
    paths.train_triples = out_dir / "train.tsv";
    paths.eval_triples = out_dir / "eval.tsv";
    paths.planted = out_dir / "planted.tsv";
    paths.config = out_dir / "pipeline.conf";
    WriteFile(paths.articles, articles.str());
    WriteFile(paths.sentences, sentence_text);
    WriteFile(paths.kb_types, kb.str());
    WriteFile(paths.train_triples, train.str());
    WriteFile(paths.eval_triples, eval.str());
    WriteFile(paths.planted, planted.str());

    std::ostringstream config;
    config << "# synthetic pipeline config\n"
           << "# gen-synth types=" << spec_.n_types << " single=" << spec_.n_single
           << " scored=" << spec_.n_scored << " seed=" << spec_.seed << "\n"
           << "domain = " << spec_.domain << "\n"
           << "seed = " << spec_.seed << "\n"
           << "article_corpus = articles.txt\n"
           << "sentence_corpus = sentences.txt\n"
           << "kb_types = kb_types.tsv\n"
           << "train_triples = train.tsv\n"
           << "eval_triples = eval.tsv\n"
           << "work_dir = work\n";
    WriteFile(paths.config, config.str());
  }

 private:
  double Uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  int UniformInt(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  template <typename T>
  const T& Pick(const std::vector<T>& items) {
    return items[static_cast<size_t>(UniformInt(0, static_cast<int>(items.size()) - 1))];
  }
  int PickWeighted(const std::vector<double>& weights) {
    double u = Uniform();
    for (size_t i = 0; i + 1 < weights.size(); ++i) {
      if (u < weights[i]) return static_cast<int>(i);
      u -= weights[i];
    }
    return static_cast<int>(weights.size()) - 1;
  }

  Entity MultiTypeEntity(int index) {
    Entity entity;
    entity.name = "M" + Pad(index + 1, 4);
    const int max_types = std::min(4, spec_.n_types);
    const int n = UniformInt(2, max_types);
    std::vector<int> pool(spec_.n_types);
    std::iota(pool.begin(), pool.end(), 0);
    const int first = UniformInt(0, spec_.n_types - 1);
    entity.types.push_back(first);
    // Planted co-occurrence: each type's "partner" is the next type id.
    while (static_cast<int>(entity.types.size()) < n) {
      int next = Uniform() < 0.5 ? (entity.types.back() + 1) % spec_.n_types
                                 : UniformInt(0, spec_.n_types - 1);
      if (std::find(entity.types.begin(), entity.types.end(), next) ==
          entity.types.end()) {
        entity.types.push_back(next);
      }
    }
    std::gamma_distribution<double> gamma(0.6, 1.0);
    double total = 0.0;
    for (size_t k = 0; k < entity.types.size(); ++k) {
      const double g = std::max(gamma(rng_), 1e-6);
      entity.weights.push_back(g);
      total += g;
    }
    for (double& w : entity.weights) w /= total;
    return entity;
  }

  std::string SignatureWord(const Entity& entity) {
    const int t = entity.types[PickWeighted(entity.weights)];
    return Pick(planted_.words.at(types_[t]));
  }

  std::string SignatureEntity(const Entity& entity) {
    const int t = entity.types[PickWeighted(entity.weights)];
    return Pick(planted_.entities.at(types_[t]));
  }

  std::string Anchor(const std::string& target) {
    std::string text = "[[" + target + "|" + Pick(planted_.generic_words);
    if (Uniform() < 0.5) text += " " + Pick(planted_.generic_words);
    return text + "]]";
  }

  std::string Article(const Entity& entity) {
    std::vector<std::string> pieces;
    for (int i = 0; i < spec_.article_tokens; ++i) {
      pieces.push_back(Uniform() < spec_.signature_rate ? SignatureWord(entity)
                                                        : Pick(planted_.generic_words));
      if (i % 12 == 11) pieces.back() += ".";
    }
    for (int a = 0; a < spec_.article_anchors; ++a) {
      const std::string target = Uniform() < spec_.signature_rate + 0.1
                                     ? SignatureEntity(entity)
                                     : Pick(planted_.generic_entities);
      const auto at = static_cast<size_t>(UniformInt(0, static_cast<int>(pieces.size())));
      pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(at), Anchor(target));
    }
    std::string text;
    for (size_t i = 0; i < pieces.size(); ++i) {
      if (i > 0) text += ' ';
      text += pieces[i];
    }
    return text;
  }

  // Context near the anchor carries signature words; farther tokens are
  // generic filler.
  std::string Sentence(const Entity& entity) {
    auto context = [&](int length, bool left) {
      std::vector<std::string> words;
      for (int i = 0; i < length; ++i) {
        const int distance = left ? length - i : i + 1;
        const bool near = distance <= 5;
        words.push_back(near && Uniform() < 0.5 ? SignatureWord(entity)
                                                : Pick(planted_.generic_words));
      }
      return words;
    };
    const auto left = context(UniformInt(3, 9), true);
    const auto right = context(UniformInt(3, 9), false);
    std::string surface = entity.name;
    std::transform(surface.begin(), surface.end(), surface.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::string text;
    for (const auto& w : left) text += w + " ";
    text += "[[" + entity.name + "|person " + surface + "]]";
    for (const auto& w : right) text += " " + w;
    if (Uniform() < 0.7) {
      const std::string other = Uniform() < 0.5 ? SignatureEntity(entity)
                                                : Pick(planted_.generic_entities);
      text += ", " + Anchor(other);
    }
    return text + ".";
  }

  const SynthSpec& spec_;
  std::mt19937_64 rng_;
  std::vector<std::string> types_;
  PlantedSignatures planted_;
};

}  // namespace

SynthPaths GenerateSynthetic(const SynthSpec& spec,
                             const std::filesystem::path& out_dir) {
  spec.Validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create " + out_dir.string() + ": " + ec.message());
  SynthPaths paths;
  Generator(spec).Run(out_dir, paths);
  return paths;
}

PlantedSignatures LoadPlanted(const std::filesystem::path& path) {
  PlantedSignatures planted;
  const auto lines = ReadLines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = SplitTabs(lines[i]);
    if (fields.size() != 3 || (fields[1] != "word" && fields[1] != "entity")) {
      throw ParseError(path.string(), static_cast<int>(i + 1),
                       "expected type<TAB>word|entity<TAB>item");
    }
    const bool word = fields[1] == "word";
    const std::string item(fields[2]);
    if (fields[0] == "-") {
      (word ? planted.generic_words : planted.generic_entities).push_back(item);
    } else {
      (word ? planted.words : planted.entities)[std::string(fields[0])].push_back(item);
    }
  }
  return planted;
}

}  // namespace triplescore
