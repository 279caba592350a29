#pragma once

#include "peerrisk/corpus.hpp"
#include "peerrisk/llm_gateway.hpp"
#include "peerrisk/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <set>
#include <string>

namespace peerrisk {

struct Config {
  struct Endpoints {
    std::string chat_provider = "http";  // "http" | "mock"
    std::string chat_url = "https://api.openai.com/v1/chat/completions";
    std::string embed_provider = "http";  // "http" | "hashed"
    std::string embed_url = "https://api.openai.com/v1/embeddings";
    std::string embed_model = "text-embedding-3-small";
    std::size_t embed_dims = 256;  // hashed embedder only
    std::string api_key_env = "OPENAI_API_KEY";
  } endpoints;

  llm::StageConfig stages;

  struct Retrieval {
    std::size_t k = 20;
    std::size_t chunk_size_words = 350;
    std::size_t overlap_words = 50;
    std::set<corpus::DocKind> doc_kinds;
  } retrieval;

  struct Cache {
    std::filesystem::path path = "cache/llm_responses.jsonl";
    std::filesystem::path embedding_path = "cache/embeddings.jsonl";
    llm::CacheMode mode = llm::CacheMode::Live;
  } cache;

  struct Paths {
    std::filesystem::path corpus_manifest = "corpus/manifest.jsonl";
    std::filesystem::path chunk_store = "work/chunks.json";
    std::filesystem::path peer_sets = "corpus/peer_sets.json";
    std::filesystem::path prompts_dir;  // empty: built-in templates
    std::filesystem::path index_snapshot = "work/index.json";
    std::filesystem::path reports_dir = "reports";
  } paths;

  std::size_t max_in_flight = 4;

  struct Evaluation {
    std::string token_embedder = "hashed";  // "hashed" | "provider"
    metrics::CandidateText candidate = metrics::CandidateText::FullText;
    std::string average = "macro";  // "macro" | "micro"
  } evaluation;

  /// Throws ConfigError when an invariant does not hold (k > 0, overlap < size,
  /// replay needs an existing cache file).
  void validate() const;

  /// Relative paths in the file resolve against the file's directory. Missing
  /// keys keep their defaults.
  static Config load(const std::filesystem::path& path);
  static Config from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

}  // namespace peerrisk
