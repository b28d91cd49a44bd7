#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trialenroll/common.hpp"

namespace trialenroll {

using Vector = std::vector<double>;

enum class EmbeddingKind { DrugName, DiseaseName, CriterionSentence, Word, LlmDrug, LlmDisease };

inline constexpr std::string_view kEmbeddingKindNames[] = {
    "DrugName", "DiseaseName", "CriterionSentence", "Word", "LlmDrug", "LlmDisease"};

inline std::string_view to_string(EmbeddingKind k) {
  return kEmbeddingKindNames[static_cast<int>(k)];
}

inline std::optional<EmbeddingKind> parse_embedding_kind(std::string_view s) {
  for (int i = 0; i < 6; ++i) {
    if (detail::iequals(s, kEmbeddingKindNames[i])) return static_cast<EmbeddingKind>(i);
  }
  return std::nullopt;
}

// Lowercase (ASCII), trimmed, internal whitespace runs collapsed to one space.
inline std::string normalize_key(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

// Immutable once built: keyed text -> fixed-dimension vector.
class EmbeddingStore {
 public:
  EmbeddingStore(EmbeddingKind kind, std::size_t dimension) : kind_(kind), dimension_(dimension) {
    if (dimension == 0) throw Error(ErrorKind::ZeroDimension, "embedding store dimension is 0");
  }

  EmbeddingKind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, Vector>& entries() const { return entries_; }

  void insert(std::string_view key, Vector vector) {
    if (vector.size() != dimension_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "vector of length " + std::to_string(vector.size()) + " in store of dimension " +
                      std::to_string(dimension_));
    }
    auto [it, inserted] = entries_.emplace(normalize_key(key), std::move(vector));
    if (!inserted) throw Error(ErrorKind::DuplicateKey, it->first);
  }

  // nullptr on Miss.
  const Vector* lookup(std::string_view key) const {
    auto it = entries_.find(normalize_key(key));
    return it == entries_.end() ? nullptr : &it->second;
  }

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  EmbeddingKind kind_;
  std::size_t dimension_;
  std::map<std::string, Vector> entries_;
};

inline std::optional<Vector> lookup_vector(const EmbeddingStore& store, std::string_view key) {
  if (const Vector* v = store.lookup(key)) return *v;
  return std::nullopt;
}

struct StubConfig {
  std::uint64_t seed = 42;
  std::size_t dimension = 768;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic pseudo-embedding: FNV-1a-64 of the normalized key XOR seed
// starts a splitmix64 stream; each draw's top 53 bits give u in [0,1), mapped
// to (2u - 1)/sqrt(d). Only exactly-rounded operations, so bit-exact.
inline Vector stub_vector(const StubConfig& cfg, std::string_view key) {
  if (cfg.dimension == 0) throw Error(ErrorKind::ZeroDimension, "stub dimension is 0");
  Rng stream(fnv1a64(normalize_key(key)) ^ cfg.seed);
  const double scale = std::sqrt(static_cast<double>(cfg.dimension));
  Vector v(cfg.dimension);
  for (double& x : v) x = (2.0 * stream.uniform() - 1.0) / scale;
  return v;
}

// Component-wise mean. Each component sums its values in sorted order, so
// the result is exactly invariant to the order of the inputs.
inline Vector mean_pool(std::span<const Vector> vectors) {
  if (vectors.empty()) throw Error(ErrorKind::EmptyList, "mean_pool of no vectors");
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d) throw Error(ErrorKind::RaggedLengths, "mean_pool over unequal lengths");
  }
  Vector out(d);
  std::vector<double> column(vectors.size());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < vectors.size(); ++i) column[i] = vectors[i][k];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double x : column) sum += x;
    out[k] = sum / static_cast<double>(vectors.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Store directory: manifest.json {kind, dimension, count} + vectors.jsonl with
// one {"key": ..., "vector": [...]} per line, numbers at 9 significant digits.

namespace detail {

inline std::string format_g9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace detail

inline void save_store(const EmbeddingStore& store, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string());
  {
    std::ofstream manifest(dir / "manifest.json", std::ios::binary);
    if (!manifest) throw Error(ErrorKind::IoError, "cannot write manifest in " + dir.string());
    nlohmann::json m = {{"kind", to_string(store.kind())},
                        {"dimension", store.dimension()},
                        {"count", store.size()}};
    manifest << m.dump(2) << '\n';
  }
  std::ofstream out(dir / "vectors.jsonl", std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write vectors in " + dir.string());
  for (const auto& [key, vec] : store.entries()) {
    out << "{\"key\":" << nlohmann::json(key).dump() << ",\"vector\":[";
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (i) out << ',';
      out << detail::format_g9(vec[i]);
    }
    out << "]}\n";
  }
}

inline EmbeddingStore load_store(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.json", std::ios::binary);
  if (!manifest) throw Error(ErrorKind::BadManifest, "missing " + (dir / "manifest.json").string());
  nlohmann::json m;
  std::optional<EmbeddingKind> kind;
  std::size_t dimension = 0, count = 0;
  try {
    manifest >> m;
    kind = parse_embedding_kind(m.at("kind").get<std::string>());
    dimension = m.at("dimension").get<std::size_t>();
    count = m.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadManifest, e.what());
  }
  if (!kind) throw Error(ErrorKind::BadManifest, "unknown kind " + m["kind"].dump());
  if (dimension == 0) throw Error(ErrorKind::BadManifest, "dimension must be positive");

  EmbeddingStore store(*kind, dimension);
  std::ifstream in(dir / "vectors.jsonl", std::ios::binary);
  if (!in) throw Error(ErrorKind::BadManifest, "missing vectors.jsonl in " + dir.string());
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (detail::trim(line).empty()) continue;
    const std::string where = "vectors.jsonl:" + std::to_string(line_no);
    Vector vec;
    std::string key;
    try {
      auto j = nlohmann::json::parse(line);
      key = j.at("key").get<std::string>();
      vec = j.at("vector").get<Vector>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::CorruptLine, where + ": " + e.what());
    }
    if (vec.size() != dimension) {
      throw Error(ErrorKind::CorruptLine, where + ": expected " + std::to_string(dimension) +
                                              " numbers, got " + std::to_string(vec.size()));
    }
    store.insert(key, std::move(vec));
  }
  if (store.size() != count) {
    throw Error(ErrorKind::DimensionMismatch, "manifest count " + std::to_string(count) +
                                                  " but " + std::to_string(store.size()) +
                                                  " vectors");
  }
  return store;
}

}  // namespace trialenroll
