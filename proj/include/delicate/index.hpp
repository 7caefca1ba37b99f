#pragma once

// Dense vector index with exact k-NN by Euclidean distance, plus the
// embedding-provider boundary that decouples the pipeline from any neural
// runtime. Distances accumulate in 64-bit over the 32-bit stored components
// so results do not depend on row order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "delicate/binio.hpp"
#include "delicate/error.hpp"
#include "delicate/rng.hpp"
#include "delicate/text.hpp"
#include "delicate/types.hpp"

namespace delicate::index {

using MentionEmbedding = std::vector<double>;

struct Hit {
  std::uint64_t entity_id = 0;
  double l2 = 0.0;
};

struct RetrievalResult {
  std::vector<Hit> hits;  // ascending by distance, ties by lower entity id
};

// Row-major f32 storage keyed by entity id. Immutable after ingest.
class EmbeddingMatrix {
 public:
  static constexpr char kMagic[4] = {'D', 'L', 'E', 'M'};
  static constexpr std::uint32_t kVersion = 1;

  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return ids_.size(); }
  std::uint64_t id_at(std::size_t row) const { return ids_[row]; }

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data_.data() + i * dim_, dim_);
  }

  void add_row(std::uint64_t id, std::span<const float> values) {
    if (values.size() != dim_) {
      throw IngestError("embedding row for id " + std::to_string(id) +
                        " has dim " + std::to_string(values.size()) + ", expected " +
                        std::to_string(dim_));
    }
    for (float v : values) {
      if (!std::isfinite(v)) {
        throw IngestError("non-finite component in embedding row for id " +
                          std::to_string(id));
      }
    }
    ids_.push_back(id);
    data_.insert(data_.end(), values.begin(), values.end());
  }

  void write(const std::string& path) const {
    binio::Writer w(path);
    w.write_bytes(kMagic, sizeof(kMagic));
    w.write<std::uint32_t>(kVersion);
    w.write<std::uint64_t>(ids_.size());
    w.write<std::uint32_t>(static_cast<std::uint32_t>(dim_));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      w.write<std::uint64_t>(ids_[i]);
      w.write_bytes(data_.data() + i * dim_, dim_ * sizeof(float));
    }
    w.finish();
  }

  static EmbeddingMatrix read(const std::string& path) {
    binio::Reader r(path);
    char magic[4];
    r.read_bytes(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
      throw IngestError("not an embedding file: " + path);
    }
    const auto version = r.read<std::uint32_t>("version");
    if (version != kVersion) {
      throw IngestError("unsupported embedding file version " +
                        std::to_string(version));
    }
    const auto n = r.read<std::uint64_t>("row count");
    const auto dim = r.read<std::uint32_t>("dim");
    if (dim == 0 && n > 0) throw IngestError("embedding file declares dim 0: " + path);

    // No up-front reserve from the untrusted header: a bogus row count is
    // caught as a truncation error instead of an allocation failure.
    EmbeddingMatrix m(dim);
    std::vector<float> row(dim);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint64_t id = 0;
      try {
        id = r.read<std::uint64_t>("entity_id");
        r.read_bytes(row.data(), dim * sizeof(float), "embedding components");
      } catch (const IngestError&) {
        throw IngestError("truncated embedding file " + path + " at row " +
                          std::to_string(i) + " of " + std::to_string(n));
      }
      for (float v : row) {
        if (!std::isfinite(v)) {
          throw IngestError("non-finite embedding component in " + path + " at row " +
                            std::to_string(i));
        }
      }
      m.ids_.push_back(id);
      m.data_.insert(m.data_.end(), row.begin(), row.end());
    }
    return m;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<float> data_;
};

inline EmbeddingMatrix ingest_embeddings(const std::string& path) {
  return EmbeddingMatrix::read(path);
}

// Inner product (the bi-encoder training score), exposed for diagnostics.
inline double dot_score(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("dot_score: dimension mismatch " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double squared_l2(std::span<const double> query, std::span<const float> row) {
  double acc = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const double d = query[i] - static_cast<double>(row[i]);
    acc += d * d;
  }
  return acc;
}

// Exact top-k by Euclidean distance; ties resolved by lower entity id.
inline RetrievalResult knn(const EmbeddingMatrix& matrix,
                           const MentionEmbedding& query, std::size_t k) {
  if (k == 0) throw ValidationError("knn: k must be >= 1");
  if (matrix.rows() > 0 && query.size() != matrix.dim()) {
    throw ValidationError("knn: query dim " + std::to_string(query.size()) +
                          " does not match index dim " + std::to_string(matrix.dim()));
  }
  for (double v : query) {
    if (!std::isfinite(v)) throw ValidationError("knn: non-finite query component");
  }

  std::vector<std::pair<double, std::uint64_t>> scored;  // (squared distance, id)
  scored.reserve(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    scored.emplace_back(squared_l2(query, matrix.row(i)), matrix.id_at(i));
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end());
  RetrievalResult result;
  result.hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    result.hits.push_back({scored[i].second, std::sqrt(scored[i].first)});
  }
  return result;
}

// --- embedding providers ----------------------------------------------------

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual MentionEmbedding embed(const Mention& mention) const = 0;
};

// Deterministic mock: per-token pseudo-random unit vectors summed over the
// surface, with down-weighted context tokens. Fixture and test use only.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim, double context_weight = 0.2)
      : dim_(dim), context_weight_(context_weight) {
    if (dim == 0) throw ConfigError("hash provider: dim must be >= 1");
  }

  std::size_t dim() const override { return dim_; }

  MentionEmbedding embed(const Mention& mention) const override {
    return embed_text(mention.surface, mention.left_context, mention.right_context);
  }

  // Entity-side vectors for fixture KBs come from the same token geometry.
  MentionEmbedding embed_text(const std::string& surface, const std::string& left = "",
                              const std::string& right = "") const {
    MentionEmbedding v(dim_, 0.0);
    accumulate(v, surface, 1.0);
    accumulate(v, left, context_weight_);
    accumulate(v, right, context_weight_);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 1e-12) {
      for (double& x : v) x /= norm;
    }
    return v;
  }

 private:
  void accumulate(MentionEmbedding& v, const std::string& text_in, double weight) const {
    if (weight == 0.0) return;
    for (const std::string& token : text::tokenize(text::normalize(text_in))) {
      rng::SplitMix64 stream(rng::hash_bytes(token.data(), token.size()));
      double norm = 0.0;
      std::vector<double> tv(dim_);
      for (double& x : tv) {
        x = stream.next_double() * 2.0 - 1.0;
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm < 1e-12) norm = 1.0;
      for (std::size_t i = 0; i < dim_; ++i) v[i] += weight * tv[i] / norm;
    }
  }

  std::size_t dim_;
  double context_weight_;
};

// Replays vectors exported from the real bi-encoder: a sidecar embedding
// file keyed by a 64-bit hash of the mention key (doc:start:end).
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  static std::uint64_t key_hash(const std::string& mention_key) {
    return rng::hash_bytes(mention_key.data(), mention_key.size());
  }

  explicit FileEmbeddingProvider(const std::string& sidecar_path) {
    const EmbeddingMatrix m = EmbeddingMatrix::read(sidecar_path);
    dim_ = m.dim();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto row = m.row(i);
      vectors_[m.id_at(i)] = MentionEmbedding(row.begin(), row.end());
    }
  }

  std::size_t dim() const override { return dim_; }

  MentionEmbedding embed(const Mention& mention) const override {
    const auto it = vectors_.find(key_hash(mention.key()));
    if (it == vectors_.end()) {
      throw ProviderError("no stored embedding for mention " + mention.key());
    }
    return it->second;
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::uint64_t, MentionEmbedding> vectors_;
};

}  // namespace delicate::index
