#pragma once

#include "peerrisk/corpus.hpp"
#include "peerrisk/error.hpp"
#include "peerrisk/http.hpp"
#include "peerrisk/index.hpp"
#include "peerrisk/llm_gateway.hpp"
#include "peerrisk/mock_chat.hpp"
#include "peerrisk/pipeline.hpp"
#include "peerrisk/prompts.hpp"
#include "peerrisk/text_util.hpp"

#include <atomic>
#include <deque>
#include <functional>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

namespace support {

/// Kind of the peerrisk::Error thrown by fn; std::logic_error if none is thrown.
template <typename Fn>
peerrisk::ErrorKind kind_of(Fn fn) {
  try {
    fn();
  } catch (const peerrisk::Error& e) {
    return e.kind();
  }
  throw std::logic_error("no peerrisk::Error thrown");
}

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(PEERRISK_FIXTURES) / rel; }

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("peerrisk-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Transport that answers from a script (or a handler) and records every request.
class ScriptedTransport final : public peerrisk::http::Transport {
 public:
  struct Request {
    std::string url;
    std::map<std::string, std::string> headers;
    std::string body;
  };
  std::deque<peerrisk::http::Response> script;
  std::function<peerrisk::http::Response(const Request&)> handler;
  std::vector<Request> requests;

  peerrisk::http::Response post(const std::string& url, const std::map<std::string, std::string>& headers,
                                const std::string& body) override {
    requests.push_back({url, headers, body});
    if (handler) return handler(requests.back());
    if (script.empty()) return {0, "", "script exhausted"};
    auto r = script.front();
    script.pop_front();
    return r;
  }
};

/// Retry policy that records delays instead of sleeping.
inline peerrisk::http::RetryPolicy no_sleep_retry(std::vector<std::chrono::milliseconds>* delays = nullptr) {
  peerrisk::http::RetryPolicy p;
  p.sleep = [delays](std::chrono::milliseconds d) {
    if (delays) delays->push_back(d);
  };
  return p;
}

inline peerrisk::corpus::Corpus load_fixture_corpus(peerrisk::corpus::ChunkingParams params = {}) {
  peerrisk::corpus::Corpus corpus(params);
  for (const auto& entry : peerrisk::corpus::load_manifest(fixture("corpus/manifest.jsonl"))) {
    corpus.add(peerrisk::corpus::ingest_document(peerrisk::text::read_file(entry.path), entry.meta));
  }
  return corpus;
}

inline peerrisk::index::VectorStore build_store(const peerrisk::corpus::Corpus& corpus,
                                                peerrisk::index::Embedder& embedder) {
  std::vector<std::string> texts;
  const auto chunks = corpus.all_chunks();
  for (const auto* c : chunks) texts.push_back(c->text);
  const auto vecs = embedder.embed_many(texts);
  peerrisk::index::VectorStore store(embedder.model_id(), vecs.front().dims());
  for (std::size_t i = 0; i < chunks.size(); ++i) store.add({chunks[i]->doc_id, chunks[i]->seq}, vecs[i]);
  return store;
}

/// Fixture corpus, hashed embeddings and the mock chat provider wired together.
struct OfflineWorld {
  peerrisk::corpus::Corpus corpus;
  peerrisk::index::HashedBagOfWordsEmbedder embed_provider{256};
  peerrisk::index::Embedder embedder{embed_provider, std::make_shared<peerrisk::index::EmbeddingCache>()};
  peerrisk::index::VectorStore store;
  peerrisk::llm::MockChatProvider mock;
  std::shared_ptr<peerrisk::llm::ResponseCache> cache;
  peerrisk::llm::Gateway gateway;
  peerrisk::prompts::PromptLibrary prompts = peerrisk::prompts::PromptLibrary::builtin();
  peerrisk::pipeline::PipelineConfig config;

  explicit OfflineWorld(peerrisk::corpus::Corpus c, std::shared_ptr<peerrisk::llm::ResponseCache> rc = nullptr,
                        peerrisk::llm::CacheMode mode = peerrisk::llm::CacheMode::Live,
                        peerrisk::llm::ChatProvider* provider = nullptr)
      : corpus(std::move(c)),
        store(build_store(corpus, embedder)),
        cache(rc ? std::move(rc) : std::make_shared<peerrisk::llm::ResponseCache>()),
        gateway(provider ? provider : &mock, cache, {mode, 4, [] { return std::string("2025-06-01T00:00:00Z"); }}) {}

  OfflineWorld() : OfflineWorld(load_fixture_corpus()) {}

  peerrisk::pipeline::PipelineDeps deps() { return {corpus, store, embedder, gateway, prompts, config}; }
};

inline std::size_t count_stage(const std::vector<peerrisk::llm::LlmExchange>& ledger, const std::string& model) {
  std::size_t n = 0;
  for (const auto& e : ledger) n += e.request.model == model;
  return n;
}

}  // namespace support
