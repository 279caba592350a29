#include "peerrisk/config.hpp"

#include "peerrisk/error.hpp"
#include "peerrisk/text_util.hpp"

namespace peerrisk {

using json = nlohmann::json;

namespace {

void read_stage(const json& j, llm::StageModel& stage) {
  if (j.contains("model")) stage.model = j.at("model").get<std::string>();
  if (j.contains("temperature")) stage.temperature = j.at("temperature").get<double>();
  if (j.contains("reasoning_level")) {
    const auto& lvl = j.at("reasoning_level");
    stage.reasoning_level = lvl.is_null() ? std::nullopt : std::optional(llm::parse_reasoning_level(lvl.get<std::string>()));
  }
  if (j.contains("max_output")) {
    const auto& m = j.at("max_output");
    stage.max_output = m.is_null() ? std::nullopt : std::optional(m.get<int>());
  }
}

std::filesystem::path resolve(const json& j, const char* key, const std::filesystem::path& fallback,
                              const std::filesystem::path& base) {
  if (!j.contains(key)) return fallback.empty() || fallback.is_absolute() ? fallback : base / fallback;
  const std::filesystem::path p = j.at(key).get<std::string>();
  if (p.empty()) return p;
  return p.is_absolute() ? p : base / p;
}

}  // namespace

void Config::validate() const {
  if (retrieval.k == 0) throw Error(ErrorKind::ConfigError, "retrieval.k must be positive");
  if (retrieval.chunk_size_words == 0 || retrieval.overlap_words >= retrieval.chunk_size_words) {
    throw Error(ErrorKind::ConfigError, "retrieval.overlap_words must be smaller than retrieval.chunk_size_words");
  }
  if (cache.mode == llm::CacheMode::Replay && !std::filesystem::exists(cache.path)) {
    throw Error(ErrorKind::ConfigError, "replay mode needs an existing cache file at " + cache.path.string());
  }
  if (endpoints.chat_provider != "http" && endpoints.chat_provider != "mock") {
    throw Error(ErrorKind::ConfigError, "endpoints.chat_provider must be \"http\" or \"mock\"");
  }
  if (endpoints.embed_provider != "http" && endpoints.embed_provider != "hashed") {
    throw Error(ErrorKind::ConfigError, "endpoints.embed_provider must be \"http\" or \"hashed\"");
  }
  if (evaluation.average != "macro" && evaluation.average != "micro") {
    throw Error(ErrorKind::ConfigError, "evaluation.average must be \"macro\" or \"micro\"");
  }
}

Config Config::from_json(const json& j, const std::filesystem::path& base) {
  Config c;
  try {
    if (j.contains("endpoints")) {
      const auto& e = j.at("endpoints");
      c.endpoints.chat_provider = e.value("chat_provider", c.endpoints.chat_provider);
      c.endpoints.chat_url = e.value("chat_url", c.endpoints.chat_url);
      c.endpoints.embed_provider = e.value("embed_provider", c.endpoints.embed_provider);
      c.endpoints.embed_url = e.value("embed_url", c.endpoints.embed_url);
      c.endpoints.embed_model = e.value("embed_model", c.endpoints.embed_model);
      c.endpoints.embed_dims = e.value("embed_dims", c.endpoints.embed_dims);
      c.endpoints.api_key_env = e.value("api_key_env", c.endpoints.api_key_env);
    }
    if (j.contains("stages")) {
      const auto& s = j.at("stages");
      for (const auto& [name, stage_json] : s.items()) {
        const auto stage = llm::parse_stage(name);
        auto& target = stage == llm::Stage::Extraction ? c.stages.extraction
                       : stage == llm::Stage::Aggregation ? c.stages.aggregation
                                                           : c.stages.final;
        read_stage(stage_json, target);
      }
    }
    if (j.contains("retrieval")) {
      const auto& r = j.at("retrieval");
      c.retrieval.k = r.value("k", c.retrieval.k);
      c.retrieval.chunk_size_words = r.value("chunk_size_words", c.retrieval.chunk_size_words);
      c.retrieval.overlap_words = r.value("overlap_words", c.retrieval.overlap_words);
      for (const auto& kind : r.value("doc_kinds", std::vector<std::string>{})) {
        c.retrieval.doc_kinds.insert(corpus::parse_doc_kind(kind));
      }
    }
    const json empty = json::object();
    const auto& cache = j.contains("cache") ? j.at("cache") : empty;
    c.cache.path = resolve(cache, "path", c.cache.path, base);
    c.cache.embedding_path = resolve(cache, "embedding_path", c.cache.embedding_path, base);
    if (cache.contains("mode")) c.cache.mode = llm::parse_cache_mode(cache.at("mode").get<std::string>());

    const auto& paths = j.contains("paths") ? j.at("paths") : empty;
    c.paths.corpus_manifest = resolve(paths, "corpus_manifest", c.paths.corpus_manifest, base);
    c.paths.chunk_store = resolve(paths, "chunk_store", c.paths.chunk_store, base);
    c.paths.peer_sets = resolve(paths, "peer_sets", c.paths.peer_sets, base);
    c.paths.prompts_dir = resolve(paths, "prompts_dir", c.paths.prompts_dir, base);
    c.paths.index_snapshot = resolve(paths, "index_snapshot", c.paths.index_snapshot, base);
    c.paths.reports_dir = resolve(paths, "reports_dir", c.paths.reports_dir, base);

    if (j.contains("concurrency")) c.max_in_flight = j.at("concurrency").value("max_in_flight", c.max_in_flight);
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      c.evaluation.token_embedder = e.value("token_embedder", c.evaluation.token_embedder);
      c.evaluation.average = e.value("average", c.evaluation.average);
      const auto cand = e.value("candidate", std::string("full_text"));
      if (cand == "full_text") {
        c.evaluation.candidate = metrics::CandidateText::FullText;
      } else if (cand == "titles") {
        c.evaluation.candidate = metrics::CandidateText::TitlesOnly;
      } else {
        throw Error(ErrorKind::ConfigError, "evaluation.candidate must be \"full_text\" or \"titles\"");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("invalid config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(text::read_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, "cannot parse config " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return from_json(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace peerrisk
