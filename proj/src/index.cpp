#include "peerrisk/index.hpp"

#include "peerrisk/error.hpp"
#include "peerrisk/text_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>

namespace peerrisk::index {

using json = nlohmann::json;

void EmbeddingVector::validate() const {
  if (values.empty()) throw Error(ErrorKind::ZeroNorm, "embedding has no dimensions");
  double sq = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::ZeroNorm, "embedding contains a non-finite value");
    sq += v * v;
  }
  if (!(sq > 0.0)) throw Error(ErrorKind::ZeroNorm, "embedding has zero norm");
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "cannot compare vectors of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " dims");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorKind::ZeroNorm, "cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.model_id != b.model_id) {
    throw Error(ErrorKind::ModelMismatch, "vectors from '" + a.model_id + "' and '" + b.model_id + "'");
  }
  return cosine(std::span<const double>(a.values), std::span<const double>(b.values));
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string bow_token(std::string_view word) {
  std::size_t b = 0;
  std::size_t e = word.size();
  const auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80; };
  while (b < e && !alnum(word[b])) ++b;
  while (e > b && !alnum(word[e - 1])) --e;
  return text::to_lower_ascii(b < e ? word.substr(b, e - b) : word);
}

}  // namespace

HashedBagOfWordsEmbedder::HashedBagOfWordsEmbedder(std::size_t dims) : dims_(dims) {
  if (dims_ == 0) throw Error(ErrorKind::InvalidParams, "embedding dims must be positive");
}

std::string HashedBagOfWordsEmbedder::model_id() const { return "hashed-bow-" + std::to_string(dims_); }

std::vector<double> HashedBagOfWordsEmbedder::embed_one(std::string_view text) const {
  std::vector<double> v(dims_, 0.0);
  for (const auto word : text::split_whitespace(text)) {
    v[fnv1a(bow_token(word)) % dims_] += 1.0;
  }
  double sq = 0.0;
  for (const double x : v) sq += x * x;
  if (sq == 0.0) throw Error(ErrorKind::EmptyInput, "nothing to embed");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<std::vector<double>> HashedBagOfWordsEmbedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, std::string model, std::string api_key,
                                             std::shared_ptr<http::Transport> transport, http::RetryPolicy retry,
                                             std::size_t batch_size)
    : url_(std::move(url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      transport_(std::move(transport)),
      retry_(std::move(retry)),
      batch_size_(std::max<std::size_t>(batch_size, 1)) {}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  auto headers = http::bearer_headers(api_key_);
  for (std::size_t begin = 0; begin < texts.size(); begin += batch_size_) {
    const std::size_t end = std::min(begin + batch_size_, texts.size());
    json body{{"model", model_}, {"input", std::vector<std::string>(texts.begin() + begin, texts.begin() + end)}};
    ++requests_;
    const auto resp = http::post_with_retry(*transport_, url_, headers, body.dump(), retry_);
    json parsed;
    try {
      parsed = json::parse(resp.body);
      const auto& data = parsed.at("data");
      if (!data.is_array() || data.size() != end - begin) {
        throw Error(ErrorKind::BadResponse, "embedding response has " + std::to_string(data.size()) +
                                                " vectors for " + std::to_string(end - begin) + " inputs");
      }
      std::vector<std::vector<double>> batch(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t slot = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
        if (slot >= batch.size()) throw Error(ErrorKind::BadResponse, "embedding index out of range");
        batch[slot] = data[i].at("embedding").get<std::vector<double>>();
      }
      for (auto& v : batch) out.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::BadResponse, std::string("malformed embedding response: ") + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(*file_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      const auto row = json::parse(line);
      entries_[row.at("model_id").get<std::string>() + '\x1f' + row.at("text_sha256").get<std::string>()] =
          row.at("values").get<std::vector<double>>();
    } catch (const json::exception&) {
      // A torn final line from an interrupted run; the entry is simply recomputed.
    }
  }
}

std::string EmbeddingCache::key(const std::string& model_id, std::string_view text) {
  return model_id + '\x1f' + text::sha256_hex(text);
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& model_id, std::string_view text) const {
  const auto k = key(model_id, text);
  std::shared_lock lock(mu_);
  const auto it = entries_.find(k);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& model_id, std::string_view text, const std::vector<double>& values) {
  const auto sha = text::sha256_hex(text);
  std::unique_lock lock(mu_);
  entries_.insert_or_assign(model_id + '\x1f' + sha, values);
  if (!file_) return;
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
  std::ofstream out(*file_, std::ios::app);
  if (!out) throw Error(ErrorKind::IoError, "cannot append to embedding cache " + file_->string());
  out << json{{"model_id", model_id}, {"text_sha256", sha}, {"values", values}}.dump() << '\n';
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

Embedder::Embedder(EmbeddingProvider& provider, std::shared_ptr<EmbeddingCache> cache, bool cache_only)
    : provider_(provider), cache_(cache ? std::move(cache) : std::make_shared<EmbeddingCache>()), cache_only_(cache_only) {}

EmbeddingVector Embedder::embed(std::string_view text) {
  return embed_many({std::string(text)}).front();
}

std::vector<EmbeddingVector> Embedder::embed_many(const std::vector<std::string>& texts) {
  const std::string model = provider_.model_id();
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> missing;
  std::vector<std::size_t> missing_slots;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (text::trim(texts[i]).empty()) throw Error(ErrorKind::EmptyInput, "cannot embed blank text");
    if (auto hit = cache_->get(model, texts[i])) {
      out[i] = EmbeddingVector{std::move(*hit), model};
    } else {
      missing.push_back(texts[i]);
      missing_slots.push_back(i);
    }
  }
  if (missing.empty()) return out;
  if (cache_only_) {
    throw Error(ErrorKind::CacheMiss, std::to_string(missing.size()) + " embedding(s) absent from cache for model '" +
                                          model + "' in replay mode");
  }
  ++provider_calls_;
  auto vectors = provider_.embed_batch(missing);
  if (vectors.size() != missing.size()) {
    throw Error(ErrorKind::BadResponse, "provider returned " + std::to_string(vectors.size()) + " vectors for " +
                                            std::to_string(missing.size()) + " texts");
  }
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    EmbeddingVector v{std::move(vectors[j]), model};
    v.validate();
    cache_->put(model, missing[j], v.values);
    out[missing_slots[j]] = std::move(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

VectorStore::VectorStore(std::string model_id, std::size_t dims) : model_id_(std::move(model_id)), dims_(dims) {}

VectorStore::VectorStore(VectorStore&& other) noexcept
    : model_id_(std::move(other.model_id_)),
      dims_(other.dims_),
      entries_(std::move(other.entries_)),
      keys_(std::move(other.keys_)) {}

VectorStore& VectorStore::operator=(VectorStore&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    model_id_ = std::move(other.model_id_);
    dims_ = other.dims_;
    entries_ = std::move(other.entries_);
    keys_ = std::move(other.keys_);
  }
  return *this;
}

void VectorStore::add(const corpus::ChunkKey& key, const EmbeddingVector& vec) {
  if (vec.model_id != model_id_) {
    throw Error(ErrorKind::ModelMismatch, "store holds '" + model_id_ + "' vectors, got '" + vec.model_id + "'");
  }
  if (vec.dims() != dims_) {
    throw Error(ErrorKind::DimensionMismatch,
                "store holds " + std::to_string(dims_) + "-dim vectors, got " + std::to_string(vec.dims()));
  }
  vec.validate();
  std::unique_lock lock(mu_);
  if (!keys_.insert(key).second) {
    throw Error(ErrorKind::DuplicateChunk, key.doc_id + "#" + std::to_string(key.seq) + " already indexed");
  }
  entries_.push_back(Entry{key, vec.values});
}

bool VectorStore::contains(const corpus::ChunkKey& key) const {
  std::shared_lock lock(mu_);
  return keys_.contains(key);
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::optional<EmbeddingVector> VectorStore::vector_of(const corpus::ChunkKey& key) const {
  std::shared_lock lock(mu_);
  for (const auto& e : entries_) {
    if (e.key == key) return EmbeddingVector{e.values, model_id_};
  }
  return std::nullopt;
}

std::vector<ChunkHit> VectorStore::query(const EmbeddingVector& query_vec, std::size_t k, const ChunkFilter& filter) const {
  if (k == 0) throw Error(ErrorKind::InvalidParams, "k must be positive");
  if (query_vec.model_id != model_id_) {
    throw Error(ErrorKind::ModelMismatch, "query embedded with '" + query_vec.model_id + "', store holds '" + model_id_ + "'");
  }
  std::shared_lock lock(mu_);
  std::vector<ChunkHit> hits;
  hits.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (filter && !filter(e.key)) continue;
    hits.push_back(ChunkHit{e.key, cosine(std::span<const double>(query_vec.values), std::span<const double>(e.values))});
  }
  if (hits.empty()) throw Error(ErrorKind::EmptyStore, "no indexed chunks match the query filter");
  // Rank on scores rounded to 1e-12 so mathematically equal cosines that differ
  // in the last bits still fall through to the key tie-break.
  const auto rank_score = [](double s) { return std::round(s * 1e12); };
  const auto better = [&](const ChunkHit& a, const ChunkHit& b) {
    const double ra = rank_score(a.score);
    const double rb = rank_score(b.score);
    if (ra != rb) return ra > rb;
    return a.chunk < b.chunk;
  };
  const std::size_t n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);
  hits.resize(n);
  return hits;
}

void VectorStore::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mu_);
  json entries = json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"doc_id", e.key.doc_id}, {"seq", e.key.seq}, {"values", e.values}});
  }
  const json root{{"model_id", model_id_}, {"dims", dims_}, {"entries", std::move(entries)}};
  text::write_file_atomic(path, root.dump() + "\n");
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  try {
    const auto root = json::parse(text::read_file(path));
    VectorStore store(root.at("model_id").get<std::string>(), root.at("dims").get<std::size_t>());
    for (const auto& e : root.at("entries")) {
      store.add(corpus::ChunkKey{e.at("doc_id").get<std::string>(), e.at("seq").get<std::size_t>()},
                EmbeddingVector{e.at("values").get<std::vector<double>>(), store.model_id_});
    }
    return store;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "corrupt index snapshot " + path.string() + ": " + e.what());
  }
}

std::vector<ChunkHit> query_top_k(const VectorStore& store, Embedder& embedder, std::string_view query_text,
                                  std::size_t k, const ChunkFilter& filter) {
  return store.query(embedder.embed(query_text), k, filter);
}

ChunkFilter make_filter(const corpus::Corpus& corpus, std::optional<std::string> ticker, std::set<corpus::DocKind> kinds) {
  std::set<std::string, std::less<>> allowed;
  for (const auto& d : corpus.documents()) {
    if (ticker && d.ticker() != *ticker) continue;
    if (!kinds.empty() && !kinds.contains(d.meta.doc_kind)) continue;
    allowed.insert(d.doc_id());
  }
  return [allowed = std::move(allowed)](const corpus::ChunkKey& key) { return allowed.contains(key.doc_id); };
}

}  // namespace peerrisk::index
