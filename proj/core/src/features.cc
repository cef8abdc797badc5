#include "triplescore/features.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "triplescore/util.h"

namespace triplescore {

// ---------------------------------------------------------------------------
// PMI

std::pair<std::string, std::string> PmiTable::Key(const std::string& a,
                                                   const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

PmiTable PmiTable::Build(std::span<const std::vector<std::string>> entity_types) {
  if (entity_types.empty()) throw ArgumentError("PMI table needs at least one entity");
  PmiTable table;
  table.n_entities_ = static_cast<int64_t>(entity_types.size());
  for (const auto& types : entity_types) {
    const std::set<std::string> distinct(types.begin(), types.end());
    for (const auto& type_name : distinct) ++table.type_counts_[type_name];
    for (auto a = distinct.begin(); a != distinct.end(); ++a) {
      for (auto b = std::next(a); b != distinct.end(); ++b) {
        ++table.pair_counts_[{*a, *b}];
      }
    }
  }
  table.Recompute();
  return table;
}

void PmiTable::Recompute() {
  scores_.clear();
  const auto n = static_cast<double>(n_entities_);
  for (const auto& [key, count] : pair_counts_) {
    const auto ca = static_cast<double>(type_counts_.at(key.first));
    const auto cb = static_cast<double>(type_counts_.at(key.second));
    scores_[key] = std::log(n * static_cast<double>(count) / (ca * cb));
  }
}

std::optional<double> PmiTable::Lookup(const std::string& a,
                                       const std::string& b) const {
  const auto it = scores_.find(Key(a, b));
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

int64_t PmiTable::TypeCount(const std::string& type_name) const {
  const auto it = type_counts_.find(type_name);
  return it == type_counts_.end() ? 0 : it->second;
}

int64_t PmiTable::PairCount(const std::string& a, const std::string& b) const {
  const auto it = pair_counts_.find(Key(a, b));
  return it == pair_counts_.end() ? 0 : it->second;
}

std::string PmiTable::ToTsv(std::span<const std::string> header) const {
  std::string out;
  for (const auto& line : header) out += "# " + line + "\n";
  out += "n_entities\t" + std::to_string(n_entities_) + "\n";
  for (const auto& [type_name, count] : type_counts_) {
    out += "type\t" + type_name + "\t" + std::to_string(count) + "\n";
  }
  for (const auto& [key, count] : pair_counts_) {
    out += "pair\t" + key.first + "\t" + key.second + "\t" +
           std::to_string(count) + "\t" + FormatDouble(scores_.at(key)) + "\n";
  }
  return out;
}

PmiTable PmiTable::FromTsv(const std::filesystem::path& path) {
  const auto lines = ReadLines(path);
  PmiTable table;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const int line_no = static_cast<int>(i + 1);
    const auto fields = SplitTabs(line);
    try {
      if (fields[0] == "n_entities" && fields.size() == 2) {
        table.n_entities_ = ParseInt(fields[1]);
      } else if (fields[0] == "type" && fields.size() == 3) {
        table.type_counts_[std::string(fields[1])] = ParseInt(fields[2]);
      } else if (fields[0] == "pair" && fields.size() == 5) {
        table.pair_counts_[Key(std::string(fields[1]), std::string(fields[2]))] =
            ParseInt(fields[3]);
      } else {
        throw ParseError(path.string(), line_no, "unrecognized PMI record");
      }
    } catch (const ArgumentError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  if (table.n_entities_ <= 0) {
    throw ParseError(path.string(), 0, "missing n_entities record");
  }
  for (const auto& [key, count] : table.pair_counts_) {
    if (table.TypeCount(key.first) <= 0 || table.TypeCount(key.second) <= 0) {
      throw ParseError(path.string(), 0, "pair references a type without a count");
    }
  }
  table.Recompute();
  return table;
}

double PmiFeature(const PmiTable& table, const std::string& target,
                  const std::string& predicted, double floor) {
  if (target == predicted) return 0.0;
  return table.Lookup(target, predicted).value_or(floor);
}

// ---------------------------------------------------------------------------
// Classifier outputs

std::vector<double> ClassifierOutputFeatures(const CandidateOutputs& outputs,
                                             size_t target) {
  if (target >= outputs.probs.size()) {
    throw ArgumentError("target type is not among the candidates");
  }
  std::vector<double> features;
  features.reserve(kOutputFeaturesPerClassifier);
  for (const auto* values : {&outputs.probs, &outputs.logits}) {
    const auto [lo, hi] = std::minmax_element(values->begin(), values->end());
    const double v = (*values)[target];
    features.push_back(v);
    features.push_back(v - *lo);
    features.push_back(*hi - v);
  }
  return features;
}

void ClassifierRegistry::Add(std::string id, ClassifierModel model) {
  for (const auto& entry : entries_) {
    if (entry.id == id) throw ArgumentError("duplicate classifier id '" + id + "'");
  }
  entries_.push_back({std::move(id), std::move(model)});
}

std::vector<std::string> ClassifierRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& entry : entries_) out.push_back(entry.id);
  return out;
}

std::vector<std::string> FeatureSchema(std::span<const std::string> classifier_ids) {
  static constexpr const char* kSuffixes[kFeaturesPerClassifier] = {
      "prob", "prob_minus_min", "max_minus_prob", "logit",
      "logit_minus_min", "max_minus_logit", "pmi"};
  std::vector<std::string> schema;
  for (const auto& id : classifier_ids) {
    for (const char* suffix : kSuffixes) schema.push_back("c" + id + "." + suffix);
  }
  schema.push_back("n_valid_types");
  return schema;
}

std::string SchemaDigest(std::span<const std::string> schema) {
  std::string joined;
  for (const auto& name : schema) {
    joined += name;
    joined += '\n';
  }
  return HexDigest(Fnv1a64(joined));
}

std::vector<CandidateOutputs> EntityOutputs(const ClassifierRegistry& registry,
                                            std::span<const BagPair> bags_per_classifier,
                                            const CandidateSet& candidates) {
  if (bags_per_classifier.size() != registry.size()) {
    throw ArgumentError("need one bag pair per registered classifier");
  }
  std::vector<CandidateOutputs> outputs;
  outputs.reserve(registry.size());
  for (size_t k = 0; k < registry.size(); ++k) {
    outputs.push_back(PredictCandidates(registry.entries()[k].model,
                                        bags_per_classifier[k],
                                        candidates.valid_types));
  }
  return outputs;
}

std::vector<double> AssembleFeatures(std::span<const CandidateOutputs> outputs,
                                     const CandidateSet& candidates,
                                     size_t target, const PmiTable& pmi) {
  if (outputs.empty()) throw ArgumentError("feature assembly needs a classifier");
  if (target >= candidates.valid_types.size()) {
    throw ArgumentError("target type is not among the candidates");
  }
  const std::string& target_type = candidates.valid_types[target];
  std::vector<double> features;
  features.reserve(kFeaturesPerClassifier * outputs.size() + 1);
  for (const auto& output : outputs) {
    if (output.probs.size() != candidates.valid_types.size()) {
      throw ArgumentError("classifier outputs do not match the candidate set");
    }
    const auto block = ClassifierOutputFeatures(output, target);
    features.insert(features.end(), block.begin(), block.end());
    features.push_back(
        PmiFeature(pmi, target_type, candidates.valid_types[output.predicted]));
  }
  features.push_back(static_cast<double>(candidates.valid_types.size()));
  return features;
}

// ---------------------------------------------------------------------------
// Feature tables

std::string FeatureTable::ToTsv(std::span<const std::string> header) const {
  std::string out;
  for (const auto& line : header) out += "# " + line + "\n";
  out += "entity\ttype";
  for (const auto& name : schema) out += "\t" + name;
  if (labeled()) out += "\tscore";
  out += "\n";
  for (size_t r = 0; r < matrix.rows(); ++r) {
    out += entities[r] + "\t" + types[r];
    for (const double value : matrix.row(r)) out += "\t" + FormatDouble(value);
    if (labeled()) out += "\t" + std::to_string(scores[r]);
    out += "\n";
  }
  return out;
}

FeatureTable FeatureTable::FromTsv(const std::filesystem::path& path) {
  const auto lines = ReadLines(path);
  FeatureTable table;
  bool have_header = false;
  size_t width = 0;
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const int line_no = static_cast<int>(i + 1);
    const auto fields = SplitTabs(line);
    if (!have_header) {
      if (fields.size() < 3 || fields[0] != "entity" || fields[1] != "type") {
        throw ParseError(path.string(), line_no, "expected feature header row");
      }
      size_t end = fields.size();
      if (fields.back() == "score") {
        --end;
        table.scores.reserve(lines.size());
      }
      for (size_t c = 2; c < end; ++c) table.schema.emplace_back(fields[c]);
      width = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != width) {
      throw ParseError(path.string(), line_no, "row width differs from header");
    }
    try {
      table.entities.emplace_back(fields[0]);
      table.types.emplace_back(fields[1]);
      std::vector<double> row;
      for (size_t c = 0; c < table.schema.size(); ++c) {
        row.push_back(ParseDouble(fields[2 + c]));
      }
      table.matrix.AppendRow(row);
      if (width == table.schema.size() + 3) {
        const auto score = ParseInt(fields.back());
        if (score < kMinScore || score > kMaxScore) {
          throw ArgumentError("score outside [0, 7]");
        }
        table.scores.push_back(static_cast<int>(score));
      }
    } catch (const ArgumentError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(path.string(), 0, "missing header row");
  if (table.matrix.rows() == 0) table.matrix = FeatureMatrix(0, table.schema.size());
  return table;
}

}  // namespace triplescore
