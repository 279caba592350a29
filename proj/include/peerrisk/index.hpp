#pragma once

#include "peerrisk/corpus.hpp"
#include "peerrisk/http.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace peerrisk::index {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;

  std::size_t dims() const { return values.size(); }
  /// Throws ZeroNorm for empty, non-finite or zero-length vectors.
  void validate() const;
};

/// dot(a,b) / (|a||b|), clamped to [-1, 1]. Throws DimensionMismatch or ZeroNorm.
double cosine(std::span<const double> a, std::span<const double> b);
/// As above, and additionally requires matching model ids (ModelMismatch).
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// ---------------------------------------------------------------------------
// Providers

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string model_id() const = 0;
  /// One vector per input text, in input order.
  virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) = 0;
};

/// Offline embedder: lowercased words hashed (FNV-1a) onto a fixed number of
/// coordinates, term counts accumulated, then L2-normalized.
class HashedBagOfWordsEmbedder final : public EmbeddingProvider {
 public:
  explicit HashedBagOfWordsEmbedder(std::size_t dims = 256);
  std::string model_id() const override;
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override;
  std::vector<double> embed_one(std::string_view text) const;
  std::size_t dims() const { return dims_; }

 private:
  std::size_t dims_;
};

/// POST {"model", "input": [...]} -> {"data": [{"embedding": [...]}, ...]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string url, std::string model, std::string api_key,
                        std::shared_ptr<http::Transport> transport, http::RetryPolicy retry = {},
                        std::size_t batch_size = 64);
  std::string model_id() const override { return model_; }
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override;
  std::size_t request_count() const { return requests_.load(); }

 private:
  std::string url_;
  std::string model_;
  std::string api_key_;
  std::shared_ptr<http::Transport> transport_;
  http::RetryPolicy retry_;
  std::size_t batch_size_;
  std::atomic<std::size_t> requests_{0};
};

// ---------------------------------------------------------------------------
// Cache + embedder front end

/// Vectors keyed by (model_id, sha256(text)). Optionally backed by an
/// append-only JSON Lines file so warm runs issue no provider calls.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path file);

  std::optional<std::vector<double>> get(const std::string& model_id, std::string_view text) const;
  void put(const std::string& model_id, std::string_view text, const std::vector<double>& values);
  std::size_t size() const;

 private:
  static std::string key(const std::string& model_id, std::string_view text);

  std::optional<std::filesystem::path> file_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

class Embedder {
 public:
  /// With cache_only set, misses raise CacheMiss instead of calling the provider.
  Embedder(EmbeddingProvider& provider, std::shared_ptr<EmbeddingCache> cache = nullptr, bool cache_only = false);

  /// Throws EmptyInput for blank text.
  EmbeddingVector embed(std::string_view text);
  std::vector<EmbeddingVector> embed_many(const std::vector<std::string>& texts);

  std::string model_id() const { return provider_.model_id(); }
  /// Number of embed_batch calls made against the provider.
  std::size_t provider_calls() const { return provider_calls_.load(); }

 private:
  EmbeddingProvider& provider_;
  std::shared_ptr<EmbeddingCache> cache_;
  bool cache_only_;
  std::atomic<std::size_t> provider_calls_{0};
};

// ---------------------------------------------------------------------------
// Vector store

struct ChunkHit {
  corpus::ChunkKey chunk;
  double score = 0.0;
};

using ChunkFilter = std::function<bool(const corpus::ChunkKey&)>;

/// Exact cosine scan over every stored vector. Queries take a shared lock,
/// writes an exclusive one.
class VectorStore {
 public:
  VectorStore(std::string model_id, std::size_t dims);
  VectorStore(VectorStore&& other) noexcept;
  VectorStore& operator=(VectorStore&& other) noexcept;

  /// Throws DuplicateChunk, ModelMismatch or DimensionMismatch.
  void add(const corpus::ChunkKey& key, const EmbeddingVector& vec);
  bool contains(const corpus::ChunkKey& key) const;
  std::size_t size() const;
  const std::string& model_id() const { return model_id_; }
  std::size_t dims() const { return dims_; }
  std::optional<EmbeddingVector> vector_of(const corpus::ChunkKey& key) const;

  /// Sorted by score (rounded to 1e-12) descending, ties by (doc_id, seq)
  /// ascending; at most k hits. Reported scores are not rounded.
  /// Throws EmptyStore when nothing passes the filter, InvalidParams for k == 0.
  std::vector<ChunkHit> query(const EmbeddingVector& query_vec, std::size_t k, const ChunkFilter& filter = {}) const;

  /// Snapshot: {"model_id", "dims", "entries": [{"doc_id", "seq", "values"}]}.
  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

 private:
  struct Entry {
    corpus::ChunkKey key;
    std::vector<double> values;
  };

  std::string model_id_;
  std::size_t dims_;
  mutable std::shared_mutex mu_;
  std::vector<Entry> entries_;
  std::set<corpus::ChunkKey> keys_;
};

/// Embeds `query_text` then delegates to VectorStore::query.
std::vector<ChunkHit> query_top_k(const VectorStore& store, Embedder& embedder, std::string_view query_text,
                                  std::size_t k, const ChunkFilter& filter = {});

/// Filter chunks by owning ticker and/or document kinds, using corpus metadata.
ChunkFilter make_filter(const corpus::Corpus& corpus, std::optional<std::string> ticker,
                        std::set<corpus::DocKind> kinds = {});

}  // namespace peerrisk::index
