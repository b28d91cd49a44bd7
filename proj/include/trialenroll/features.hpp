#pragma once

// Turns TrialRecords into model inputs: a fixed-width cross-network vector
// (one-hots, numeric columns, pooled entity embeddings) and per-sentence word
// vector groups for the hierarchical attention encoder.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trialenroll/common.hpp"
#include "trialenroll/embeddings.hpp"
#include "trialenroll/ingest.hpp"

namespace trialenroll {

enum class GroupKind { OneHot, Numeric, Embedding };

inline std::string_view to_string(GroupKind k) {
  switch (k) {
    case GroupKind::OneHot: return "onehot";
    case GroupKind::Numeric: return "numeric";
    case GroupKind::Embedding: return "embedding";
  }
  return "";
}

// Words: every criterion word gets its own vector (attention over words).
// Sentences: each sentence is a single vector (sentence store or stub).
enum class HanMode { Words, Sentences };

struct FeatureGroup {
  std::string name;
  GroupKind kind;
  std::size_t offset;
  std::size_t width;
  friend bool operator==(const FeatureGroup&, const FeatureGroup&) = default;
};

inline constexpr std::size_t kNumericColumns = 6;  // min, max, span, Q, R, Q+R

struct SchemaOptions {
  std::size_t top_k_countries = 30;
  std::size_t dimension = 768;
  HanMode han_mode = HanMode::Words;
  bool standardize_numeric = true;
  std::uint64_t stub_seed = 42;
};

struct FeatureSchema {
  std::vector<FeatureGroup> groups;
  std::vector<std::string> countries;  // ordered vocabulary; the slot after it is "other"
  std::size_t dimension = 0;
  std::size_t cross_width = 0;
  HanMode han_mode = HanMode::Words;
  std::uint64_t stub_seed = 42;
  bool standardize_numeric = true;
  // Applied as (x - mean) / scale to ages and counts when standardizing.
  std::array<double, kNumericColumns> numeric_mean{};
  std::array<double, kNumericColumns> numeric_scale{1, 1, 1, 1, 1, 1};

  const FeatureGroup& group(std::string_view name) const {
    for (const auto& g : groups) {
      if (g.name == name) return g;
    }
    throw Error(ErrorKind::SchemaMismatch, "no feature group " + std::string(name));
  }

  StubConfig stub() const { return {stub_seed, dimension}; }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

// Throws SchemaMismatch unless the groups tile [0, cross_width) and widths
// agree with their kinds.
inline void check_schema(const FeatureSchema& s) {
  std::size_t cursor = 0;
  for (const auto& g : s.groups) {
    if (g.offset != cursor) throw Error(ErrorKind::SchemaMismatch, "group " + g.name + " not contiguous");
    if (g.kind == GroupKind::Embedding && g.width != s.dimension) {
      throw Error(ErrorKind::SchemaMismatch, "embedding group " + g.name + " width != dimension");
    }
    cursor += g.width;
  }
  if (cursor != s.cross_width) throw Error(ErrorKind::SchemaMismatch, "groups do not cover cross width");
  const auto expect = [&](std::string_view name, std::size_t width) {
    if (s.group(name).width != width) {
      throw Error(ErrorKind::SchemaMismatch, "group " + std::string(name) + " has wrong width");
    }
  };
  expect("gender", 3);
  expect("phase", 4);
  expect("geo", s.countries.size() + 1);
  expect("age", 3);
  expect("criteria_count", 3);
}

namespace detail {

inline FeatureSchema layout_schema(std::vector<std::string> countries, const SchemaOptions& opt) {
  FeatureSchema s;
  s.countries = std::move(countries);
  s.dimension = opt.dimension;
  s.han_mode = opt.han_mode;
  s.stub_seed = opt.stub_seed;
  s.standardize_numeric = opt.standardize_numeric;
  auto add = [&](std::string name, GroupKind kind, std::size_t width) {
    s.groups.push_back({std::move(name), kind, s.cross_width, width});
    s.cross_width += width;
  };
  add("gender", GroupKind::OneHot, 3);
  add("phase", GroupKind::OneHot, 4);
  add("geo", GroupKind::OneHot, s.countries.size() + 1);
  add("age", GroupKind::Numeric, 3);
  add("criteria_count", GroupKind::Numeric, 3);
  add("drug", GroupKind::Embedding, opt.dimension);
  add("disease", GroupKind::Embedding, opt.dimension);
  add("llm_drug", GroupKind::Embedding, opt.dimension);
  add("llm_disease", GroupKind::Embedding, opt.dimension);
  return s;
}

}  // namespace detail

inline std::array<double, 3> encode_age(const TrialRecord& r) {
  return {r.min_age_years, r.max_age_years, r.max_age_years - r.min_age_years};
}

inline std::array<double, 3> criteria_counts(const TrialRecord& r) {
  const auto q = static_cast<double>(r.inclusion.size());
  const auto rr = static_cast<double>(r.exclusion.size());
  return {q, rr, q + rr};
}

// Geo vocabulary: the top-K first-listed countries of the training records
// (ties by name). Numeric scaling statistics come from the same records.
inline FeatureSchema fit_schema(const std::vector<TrialRecord>& train, const SchemaOptions& opt) {
  if (opt.dimension == 0) throw Error(ErrorKind::ZeroDimension, "schema dimension is 0");
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit schema on no records");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : train) {
    if (!r.countries.empty()) ++counts[r.countries.front()];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < ranked.size() && i < opt.top_k_countries; ++i) {
    vocab.push_back(ranked[i].first);
  }
  FeatureSchema s = detail::layout_schema(std::move(vocab), opt);

  if (opt.standardize_numeric) {
    std::array<double, kNumericColumns> sum{}, sq{};
    for (const auto& r : train) {
      const auto a = encode_age(r);
      const auto c = criteria_counts(r);
      const std::array<double, kNumericColumns> row{a[0], a[1], a[2], c[0], c[1], c[2]};
      for (std::size_t k = 0; k < kNumericColumns; ++k) sum[k] += row[k];
    }
    const auto n = static_cast<double>(train.size());
    for (std::size_t k = 0; k < kNumericColumns; ++k) s.numeric_mean[k] = sum[k] / n;
    for (const auto& r : train) {
      const auto a = encode_age(r);
      const auto c = criteria_counts(r);
      const std::array<double, kNumericColumns> row{a[0], a[1], a[2], c[0], c[1], c[2]};
      for (std::size_t k = 0; k < kNumericColumns; ++k) {
        sq[k] += (row[k] - s.numeric_mean[k]) * (row[k] - s.numeric_mean[k]);
      }
    }
    for (std::size_t k = 0; k < kNumericColumns; ++k) {
      const double sd = std::sqrt(sq[k] / n);
      s.numeric_scale[k] = sd > 1e-12 ? sd : 1.0;
    }
  }
  return s;
}

// Gender (All, Female, Male), phase (I..IV) and geo (vocabulary + other),
// concatenated. The first listed country wins; no country maps to "other".
inline Vector encode_categoricals(const TrialRecord& r, const FeatureSchema& schema) {
  if (!r.phase) throw Error(ErrorKind::InvalidRecord, r.nct_id + ": phase required for features");
  Vector out(3 + 4 + schema.countries.size() + 1, 0.0);
  out[static_cast<std::size_t>(r.gender)] = 1.0;
  out[3 + static_cast<std::size_t>(*r.phase)] = 1.0;
  std::size_t geo = schema.countries.size();
  if (!r.countries.empty()) {
    auto it = std::find(schema.countries.begin(), schema.countries.end(), r.countries.front());
    if (it != schema.countries.end()) geo = static_cast<std::size_t>(it - schema.countries.begin());
  }
  out[7 + geo] = 1.0;
  return out;
}

// Lookup sources. Null stores miss on every key; misses fall back to the
// schema's stub, except the LLM groups, which stay zero without a store.
struct EmbeddingSources {
  const EmbeddingStore* drug = nullptr;
  const EmbeddingStore* disease = nullptr;
  const EmbeddingStore* word = nullptr;
  const EmbeddingStore* sentence = nullptr;
  const EmbeddingStore* llm_drug = nullptr;
  const EmbeddingStore* llm_disease = nullptr;
};

inline void check_sources(const EmbeddingSources& src, std::size_t dimension) {
  for (const EmbeddingStore* s :
       {src.drug, src.disease, src.word, src.sentence, src.llm_drug, src.llm_disease}) {
    if (s && s->dimension() != dimension) {
      throw Error(ErrorKind::DimensionMismatch,
                  std::string(to_string(s->kind())) + " store has dimension " +
                      std::to_string(s->dimension()) + ", schema expects " +
                      std::to_string(dimension));
    }
  }
}

inline Vector lookup_or_stub(const EmbeddingStore* store, const StubConfig& stub,
                             std::string_view key) {
  if (store) {
    if (const Vector* v = store->lookup(key)) return *v;
  }
  return stub_vector(stub, key);
}

// Mean of the per-name vectors; empty list gives the zero vector.
inline Vector embed_entity_set(const std::vector<std::string>& names, const EmbeddingStore* store,
                               const StubConfig& stub) {
  if (names.empty()) return Vector(stub.dimension, 0.0);
  std::vector<Vector> vectors;
  vectors.reserve(names.size());
  for (const auto& n : names) vectors.push_back(lookup_or_stub(store, stub, n));
  return mean_pool(vectors);
}

// Whitespace and ASCII punctuation separate tokens; non-ASCII bytes are word
// characters, so "Age ≥ 18" gives {"Age", "≥", "18"}.
inline std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : sentence) {
    const auto u = static_cast<unsigned char>(c);
    const bool separator = u < 0x80 && (std::isspace(u) || std::ispunct(u));
    if (separator) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

using SentenceWords = std::vector<Vector>;
using CriteriaGroup = std::vector<SentenceWords>;

// Encoder input plus the text each vector came from.
struct EmbeddedCriteria {
  CriteriaGroup inclusion_words, exclusion_words;
  std::vector<std::string> inclusion_sentences, exclusion_sentences;
  std::vector<std::vector<std::string>> inclusion_tokens, exclusion_tokens;
};

inline EmbeddedCriteria embed_criteria(const TrialRecord& r, const FeatureSchema& schema,
                                       const EmbeddingSources& src) {
  const StubConfig stub = schema.stub();
  EmbeddedCriteria out;
  auto embed_group = [&](const std::vector<std::string>& sentences, CriteriaGroup& words,
                         std::vector<std::string>& kept,
                         std::vector<std::vector<std::string>>& tokens_out) {
    for (const auto& sentence : sentences) {
      auto tokens = tokenize(sentence);
      if (tokens.empty()) continue;
      SentenceWords vectors;
      if (schema.han_mode == HanMode::Words) {
        for (const auto& t : tokens) vectors.push_back(lookup_or_stub(src.word, stub, t));
      } else {
        vectors.push_back(lookup_or_stub(src.sentence, stub, sentence));
        tokens = {sentence};
      }
      words.push_back(std::move(vectors));
      kept.push_back(sentence);
      tokens_out.push_back(std::move(tokens));
    }
  };
  embed_group(r.inclusion, out.inclusion_words, out.inclusion_sentences, out.inclusion_tokens);
  embed_group(r.exclusion, out.exclusion_words, out.exclusion_sentences, out.exclusion_tokens);
  return out;
}

struct FeatureBundle {
  std::string nct_id;
  std::optional<int> label;
  std::optional<Date> completion_date;
  Vector cross_input;
  CriteriaGroup inclusion_words;
  CriteriaGroup exclusion_words;

  friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

// Cross-input part of assemble(), without criteria text.
inline Vector assemble_cross_input(const TrialRecord& r, const FeatureSchema& schema,
                                   const EmbeddingSources& src) {
  const StubConfig stub = schema.stub();
  Vector x = encode_categoricals(r, schema);
  const auto age = encode_age(r);
  const auto counts = criteria_counts(r);
  const std::array<double, kNumericColumns> numeric{age[0],    age[1],    age[2],
                                                    counts[0], counts[1], counts[2]};
  for (std::size_t k = 0; k < kNumericColumns; ++k) {
    x.push_back(schema.standardize_numeric
                    ? (numeric[k] - schema.numeric_mean[k]) / schema.numeric_scale[k]
                    : numeric[k]);
  }
  auto append = [&](const Vector& v) { x.insert(x.end(), v.begin(), v.end()); };
  append(embed_entity_set(r.drugs, src.drug, stub));
  append(embed_entity_set(r.diseases, src.disease, stub));
  const Vector zero(schema.dimension, 0.0);
  append(src.llm_drug ? embed_entity_set(r.drugs, src.llm_drug, stub) : zero);
  append(src.llm_disease ? embed_entity_set(r.diseases, src.llm_disease, stub) : zero);
  return x;
}

struct AnnotatedBundle {
  FeatureBundle bundle;
  EmbeddedCriteria criteria;  // word vectors moved into bundle; text kept here
};

inline AnnotatedBundle assemble_annotated(const TrialRecord& r, const FeatureSchema& schema,
                                          const EmbeddingSources& src) {
  check_sources(src, schema.dimension);
  AnnotatedBundle out;
  out.bundle.nct_id = r.nct_id;
  out.bundle.label = r.label;
  out.bundle.completion_date = r.completion_date;
  out.bundle.cross_input = assemble_cross_input(r, schema, src);
  if (out.bundle.cross_input.size() != schema.cross_width) {
    throw Error(ErrorKind::SchemaMismatch, "cross input width disagrees with schema");
  }
  out.criteria = embed_criteria(r, schema, src);
  out.bundle.inclusion_words = std::move(out.criteria.inclusion_words);
  out.bundle.exclusion_words = std::move(out.criteria.exclusion_words);
  out.criteria.inclusion_words.clear();
  out.criteria.exclusion_words.clear();
  return out;
}

inline FeatureBundle assemble(const TrialRecord& r, const FeatureSchema& schema,
                              const EmbeddingSources& src) {
  return assemble_annotated(r, schema, src).bundle;
}

// Throws SchemaMismatch when a bundle breaks the layout contract.
inline void check_bundle(const FeatureBundle& b, const FeatureSchema& schema) {
  if (b.cross_input.size() != schema.cross_width) {
    throw Error(ErrorKind::SchemaMismatch, b.nct_id + ": cross input width");
  }
  for (const auto& g : schema.groups) {
    double sum = 0.0;
    for (std::size_t i = g.offset; i < g.offset + g.width; ++i) {
      if (!std::isfinite(b.cross_input[i])) {
        throw Error(ErrorKind::SchemaMismatch, b.nct_id + ": non-finite value in " + g.name);
      }
      sum += b.cross_input[i];
    }
    if (g.kind == GroupKind::OneHot && sum != 1.0) {
      throw Error(ErrorKind::SchemaMismatch, b.nct_id + ": one-hot group " + g.name + " sum != 1");
    }
  }
  for (const auto* group : {&b.inclusion_words, &b.exclusion_words}) {
    for (const auto& sentence : *group) {
      if (sentence.empty()) throw Error(ErrorKind::SchemaMismatch, b.nct_id + ": empty sentence");
      for (const auto& w : sentence) {
        if (w.size() != schema.dimension) {
          throw Error(ErrorKind::SchemaMismatch, b.nct_id + ": word vector dimension");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Serialization: schema.json plus line-delimited bundles.

inline nlohmann::json to_json(const FeatureSchema& s) {
  using nlohmann::json;
  json groups = json::array();
  for (const auto& g : s.groups) {
    groups.push_back({{"name", g.name}, {"kind", to_string(g.kind)},
                      {"offset", g.offset}, {"width", g.width}});
  }
  return {{"groups", groups},
          {"countries", s.countries},
          {"dimension", s.dimension},
          {"cross_width", s.cross_width},
          {"han_mode", s.han_mode == HanMode::Words ? "words" : "sentences"},
          {"stub_seed", s.stub_seed},
          {"standardize_numeric", s.standardize_numeric},
          {"numeric_mean", s.numeric_mean},
          {"numeric_scale", s.numeric_scale}};
}

inline FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema s;
  try {
    for (const auto& g : j.at("groups")) {
      const auto kind = g.at("kind").get<std::string>();
      GroupKind k = kind == "onehot"    ? GroupKind::OneHot
                    : kind == "numeric" ? GroupKind::Numeric
                                        : GroupKind::Embedding;
      s.groups.push_back({g.at("name").get<std::string>(), k, g.at("offset").get<std::size_t>(),
                          g.at("width").get<std::size_t>()});
    }
    s.countries = j.at("countries").get<std::vector<std::string>>();
    s.dimension = j.at("dimension").get<std::size_t>();
    s.cross_width = j.at("cross_width").get<std::size_t>();
    s.han_mode = j.at("han_mode").get<std::string>() == "sentences" ? HanMode::Sentences
                                                                     : HanMode::Words;
    s.stub_seed = j.at("stub_seed").get<std::uint64_t>();
    s.standardize_numeric = j.at("standardize_numeric").get<bool>();
    s.numeric_mean = j.at("numeric_mean").get<std::array<double, kNumericColumns>>();
    s.numeric_scale = j.at("numeric_scale").get<std::array<double, kNumericColumns>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("schema: ") + e.what());
  }
  check_schema(s);
  return s;
}

inline nlohmann::json to_json(const FeatureBundle& b) {
  using nlohmann::json;
  return {{"nct_id", b.nct_id},
          {"label", b.label ? json(*b.label) : json(nullptr)},
          {"completion_date", b.completion_date ? json(b.completion_date->iso()) : json(nullptr)},
          {"cross_input", b.cross_input},
          {"inclusion", b.inclusion_words},
          {"exclusion", b.exclusion_words}};
}

inline FeatureBundle bundle_from_json(const nlohmann::json& j) {
  FeatureBundle b;
  b.nct_id = j.at("nct_id").get<std::string>();
  if (!j.at("label").is_null()) b.label = j["label"].get<int>();
  if (!j.at("completion_date").is_null()) {
    b.completion_date = detail::parse_date(j["completion_date"].get<std::string>());
  }
  b.cross_input = j.at("cross_input").get<Vector>();
  b.inclusion_words = j.at("inclusion").get<CriteriaGroup>();
  b.exclusion_words = j.at("exclusion").get<CriteriaGroup>();
  return b;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::CorruptLine, path.string() + ": " + e.what());
  }
}

inline void write_bundles_jsonl(const std::filesystem::path& path,
                                const std::vector<FeatureBundle>& bundles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  for (const auto& b : bundles) out << to_json(b).dump() << '\n';
}

inline std::vector<FeatureBundle> read_bundles_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::vector<FeatureBundle> out;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(bundle_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::CorruptLine,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace trialenroll
