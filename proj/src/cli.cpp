#include "peerrisk/cli.hpp"

#include "peerrisk/config.hpp"
#include "peerrisk/corpus.hpp"
#include "peerrisk/error.hpp"
#include "peerrisk/index.hpp"
#include "peerrisk/llm_gateway.hpp"
#include "peerrisk/metrics.hpp"
#include "peerrisk/mock_chat.hpp"
#include "peerrisk/pipeline.hpp"
#include "peerrisk/prompts.hpp"
#include "peerrisk/text_util.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

namespace peerrisk::cli {

namespace {

using ojson = nlohmann::ordered_json;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ConfigError: return kUsage;
    case ErrorKind::ProviderError:
    case ErrorKind::BadResponse:
    case ErrorKind::CacheMiss:
    case ErrorKind::EmbedderError: return kProviderError;
    default: return kDataError;
  }
}

/// Providers, caches and gateway assembled from a Config.
struct Runtime {
  Config cfg;
  std::unique_ptr<index::EmbeddingProvider> embed_provider;
  std::unique_ptr<index::Embedder> embedder;
  std::unique_ptr<llm::ChatProvider> chat;
  std::unique_ptr<llm::Gateway> gateway;

  explicit Runtime(Config c) : cfg(std::move(c)) {}

  std::string api_key() const {
    const char* v = std::getenv(cfg.endpoints.api_key_env.c_str());
    return v ? v : "";
  }

  index::Embedder& get_embedder() {
    if (!embedder) {
      if (cfg.endpoints.embed_provider == "hashed") {
        embed_provider = std::make_unique<index::HashedBagOfWordsEmbedder>(cfg.endpoints.embed_dims);
      } else {
        embed_provider = std::make_unique<index::HttpEmbeddingProvider>(
            cfg.endpoints.embed_url, cfg.endpoints.embed_model, api_key(), std::make_shared<http::HttplibTransport>());
      }
      auto cache = std::make_shared<index::EmbeddingCache>(cfg.cache.embedding_path);
      embedder = std::make_unique<index::Embedder>(*embed_provider, std::move(cache),
                                                   cfg.cache.mode == llm::CacheMode::Replay);
    }
    return *embedder;
  }

  llm::Gateway& get_gateway() {
    if (!gateway) {
      if (cfg.endpoints.chat_provider == "mock") {
        chat = std::make_unique<llm::MockChatProvider>();
      } else {
        chat = std::make_unique<llm::HttpChatProvider>(cfg.endpoints.chat_url, api_key(),
                                                       std::make_shared<http::HttplibTransport>());
      }
      auto cache = std::make_shared<llm::ResponseCache>(cfg.cache.path);
      gateway = std::make_unique<llm::Gateway>(chat.get(), std::move(cache),
                                               llm::GatewayOptions{cfg.cache.mode, cfg.max_in_flight, {}});
    }
    return *gateway;
  }

  prompts::PromptLibrary prompts() const {
    return cfg.paths.prompts_dir.empty() ? prompts::PromptLibrary::builtin()
                                         : prompts::PromptLibrary::load_dir(cfg.paths.prompts_dir);
  }
};

// ---------------------------------------------------------------------------

int cmd_ingest(Runtime& rt, const std::filesystem::path& manifest, std::ostream& out, std::ostream& err) {
  const auto entries = corpus::load_manifest(manifest);
  corpus::Corpus corpus(corpus::ChunkingParams{rt.cfg.retrieval.chunk_size_words, rt.cfg.retrieval.overlap_words});
  int failures = 0;
  for (const auto& entry : entries) {
    try {
      if (!std::filesystem::exists(entry.path)) {
        throw Error(ErrorKind::IoError, "missing file " + entry.path.string());
      }
      auto doc = corpus::ingest_document(text::read_file(entry.path), entry.meta);
      const auto words = text::split_whitespace(doc.text).size();
      const auto& chunks = corpus.add(std::move(doc));
      out << entry.meta.doc_id << "\t" << entry.meta.ticker << "\t" << corpus::to_string(entry.meta.doc_kind) << "\t"
          << words << " words\t" << chunks.size() << " chunks\n";
    } catch (const Error& e) {
      ++failures;
      err << "error: " << entry.meta.doc_id << " (" << entry.path.string() << "): " << e.what() << "\n";
    }
  }
  corpus.save(rt.cfg.paths.chunk_store);
  out << corpus.documents().size() << " documents, " << corpus.chunk_count() << " chunks -> "
      << rt.cfg.paths.chunk_store.string() << "\n";
  return failures == 0 ? kOk : kDataError;
}

int cmd_index(Runtime& rt, std::ostream& out) {
  const auto corpus = corpus::Corpus::load(rt.cfg.paths.chunk_store);
  auto& embedder = rt.get_embedder();
  const auto model = embedder.model_id();
  if (std::filesystem::exists(rt.cfg.paths.index_snapshot)) {
    const auto existing = index::VectorStore::load(rt.cfg.paths.index_snapshot);
    if (existing.model_id() != model) {
      throw Error(ErrorKind::ModelMismatch, "snapshot " + rt.cfg.paths.index_snapshot.string() + " was built with '" +
                                                existing.model_id() + "', configured embedder is '" + model + "'");
    }
  }
  const auto chunks = corpus.all_chunks();
  if (chunks.empty()) throw Error(ErrorKind::EmptyStore, "no chunks to index; run ingest first");
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto* c : chunks) texts.push_back(c->text);
  const auto vectors = embedder.embed_many(texts);
  index::VectorStore store(model, vectors.front().dims());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    store.add(corpus::ChunkKey{chunks[i]->doc_id, chunks[i]->seq}, vectors[i]);
  }
  store.save(rt.cfg.paths.index_snapshot);
  out << "indexed " << store.size() << " chunks, dims " << store.dims() << ", model " << model << ", embed calls "
      << embedder.provider_calls() << " -> " << rt.cfg.paths.index_snapshot.string() << "\n";
  return kOk;
}

int cmd_generate(Runtime& rt, const std::string& target, bool baseline, const std::string& final_model,
                 const std::filesystem::path& out_path, std::ostream& out) {
  if (!final_model.empty()) rt.cfg.stages.final = llm::final_model_preset(final_model, rt.cfg.stages.final);
  const auto corpus = corpus::Corpus::load(rt.cfg.paths.chunk_store);
  const auto store = index::VectorStore::load(rt.cfg.paths.index_snapshot);
  const auto library = rt.prompts();
  pipeline::PipelineDeps deps{corpus, store, rt.get_embedder(), rt.get_gateway(), library,
                              pipeline::PipelineConfig{rt.cfg.retrieval.k, rt.cfg.stages, rt.cfg.retrieval.doc_kinds,
                                                       rt.cfg.max_in_flight}};

  pipeline::RiskReport report;
  if (baseline) {
    report = pipeline::run_baseline(target, deps);
  } else {
    const auto sets = std::filesystem::exists(rt.cfg.paths.peer_sets)
                          ? pipeline::load_peer_sets(rt.cfg.paths.peer_sets)
                          : std::map<std::string, pipeline::PeerSet, std::less<>>{};
    report = pipeline::run_contrastive(pipeline::find_peer_set(sets, target), deps);
  }

  const auto path = !out_path.empty() ? out_path
                                      : rt.cfg.paths.reports_dir / (target + "." + std::string(pipeline::to_string(report.mode)) +
                                                                    "." + report.final_model + ".json");
  text::write_file_atomic(path, pipeline::serialize_report(report));
  out << report.ticker << " " << pipeline::to_string(report.mode) << " (" << report.final_model << ")\n";
  for (const auto& item : report.items) out << "  " << item.rank << ". " << item.title << "\n";
  for (const auto& w : report.warnings) out << "  warning: " << w << "\n";
  const auto ledger = rt.get_gateway().ledger();
  const auto cached = std::count_if(ledger.begin(), ledger.end(), [](const auto& ex) { return ex.from_cache; });
  out << ledger.size() << " LLM requests (" << cached << " from cache) -> " << path.string() << "\n";
  return kOk;
}

void print_grid(const std::vector<std::pair<std::string, metrics::EvalScores>>& rows, std::ostream& out) {
  out << std::left << std::setw(28) << "Model / Mode";
  for (const char* h : {"BERT-R", "BERT-F1", "R1-R", "R1-F1", "R2-R", "R2-F1", "RL-R", "RL-F1"}) {
    out << std::right << std::setw(9) << h;
  }
  out << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& [label, s] : rows) {
    out << std::left << std::setw(28) << label << std::right;
    for (const auto* p : {&s.bert, &s.rouge1, &s.rouge2, &s.rougeL}) {
      out << std::setw(9) << p->recall << std::setw(9) << p->f1;
    }
    out << "\n";
  }
  out << std::defaultfloat;
}

int cmd_evaluate(Runtime& rt, const std::filesystem::path& manifest, const std::filesystem::path& out_path,
                 std::ostream& out, std::ostream& err) {
  const auto rows = metrics::load_eval_manifest(manifest);
  if (rows.empty()) throw Error(ErrorKind::EmptyList, "evaluation manifest " + manifest.string() + " has no rows");

  std::unique_ptr<metrics::TokenEmbedder> token_embedder;
  if (rt.cfg.evaluation.token_embedder == "provider") {
    token_embedder = std::make_unique<metrics::ProviderTokenEmbedder>(rt.get_embedder());
  } else {
    token_embedder = std::make_unique<metrics::HashedTokenEmbedder>();
  }

  struct Group {
    std::vector<metrics::EvalScores> scores;
    std::vector<metrics::EvalCounts> counts;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  std::vector<metrics::EvalScores> all_scores;
  std::vector<metrics::EvalCounts> all_counts;
  ojson per_company = ojson::array();
  int failures = 0;
  for (const auto& row : rows) {
    try {
      const auto report = pipeline::load_report(row.report_path);
      const auto reference = text::read_file(row.reference_path);
      if (text::trim(reference).empty()) {
        throw Error(ErrorKind::EmptyReference, "reference " + row.reference_path.string() + " is empty");
      }
      const auto counts = metrics::score_text_counts(metrics::candidate_text(report, rt.cfg.evaluation.candidate),
                                                     reference, *token_embedder);
      const auto scores = counts.scores();
      per_company.push_back({{"ticker", row.ticker},
                             {"mode", std::string(pipeline::to_string(report.mode))},
                             {"final_model", report.final_model},
                             {"scores", metrics::to_json(scores)}});
      auto& g = groups[{report.final_model, std::string(pipeline::to_string(report.mode))}];
      g.scores.push_back(scores);
      g.counts.push_back(counts);
      all_scores.push_back(scores);
      all_counts.push_back(counts);
    } catch (const Error& e) {
      ++failures;
      err << "error: " << row.ticker << ": " << e.what() << "\n";
    }
  }
  if (all_scores.empty()) throw Error(ErrorKind::EmptyList, "no evaluation row could be scored");

  const bool micro = rt.cfg.evaluation.average == "micro";
  std::vector<std::pair<std::string, metrics::EvalScores>> grid;
  ojson group_json = ojson::array();
  for (const auto& [key, g] : groups) {
    const auto avg = micro ? metrics::micro_average(g.counts) : metrics::macro_average(g.scores);
    std::string mode = key.second;
    mode[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(mode[0])));
    grid.emplace_back(key.first + " / " + mode, avg);
    group_json.push_back({{"final_model", key.first}, {"mode", key.second}, {"n", g.scores.size()},
                          {"average", rt.cfg.evaluation.average}, {"scores", metrics::to_json(avg)}});
  }
  ojson result{{"per_company", std::move(per_company)},
               {"macro", metrics::to_json(metrics::macro_average(all_scores))},
               {"micro", metrics::to_json(metrics::micro_average(all_counts))},
               {"groups", std::move(group_json)}};

  print_grid(grid, out);
  const auto path = out_path.empty() ? rt.cfg.paths.reports_dir / "scores.json" : out_path;
  text::write_file_atomic(path, result.dump(2) + "\n");
  out << all_scores.size() << " report(s) scored -> " << path.string() << "\n";
  return failures == 0 ? kOk : kDataError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-contrastive risk identification over company filings"};
  app.require_subcommand(1);
  std::string config_path;
  std::string cache_mode;
  app.add_option("--config", config_path, "Config file (JSON)");
  app.add_option("--cache-mode", cache_mode, "Override cache.mode: live | record | replay");

  auto* ingest = app.add_subcommand("ingest", "Normalize and chunk the documents of a corpus manifest");
  std::string manifest;
  ingest->add_option("manifest", manifest, "Corpus manifest (JSON Lines); defaults to paths.corpus_manifest");

  auto* index_cmd = app.add_subcommand("index", "Embed every chunk and write the index snapshot");

  auto* generate = app.add_subcommand("generate", "Produce a ranked risk report for one company");
  std::string target;
  std::string final_model;
  std::string report_out;
  bool baseline = false;
  bool contrastive = false;
  generate->add_option("--target", target, "Target ticker")->required();
  auto* baseline_flag = generate->add_flag("--baseline", baseline, "Final stage over the target alone");
  auto* contrastive_flag = generate->add_flag("--contrastive", contrastive, "Final stage against the peer set (default)");
  baseline_flag->excludes(contrastive_flag);
  generate->add_option("--final-model", final_model, "Override the final-stage model (o3, gpt-4o, gpt-4.1, ...)");
  generate->add_option("--out", report_out, "Report path; defaults under paths.reports_dir");

  auto* evaluate = app.add_subcommand("evaluate", "Score reports against reference texts");
  std::string eval_manifest;
  std::string scores_out;
  std::string average;
  bool titles_only = false;
  evaluate->add_option("--manifest", eval_manifest, "Evaluation manifest (JSON Lines)")->required();
  evaluate->add_option("--out", scores_out, "Scores JSON path");
  evaluate->add_option("--average", average, "macro | micro")->check(CLI::IsMember({"macro", "micro"}));
  evaluate->add_flag("--titles-only", titles_only, "Score risk titles instead of the full report text");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    Config cfg;
    if (!config_path.empty()) {
      cfg = Config::load(config_path);
    } else if (std::filesystem::exists("peerrisk.json")) {
      cfg = Config::load("peerrisk.json");
    } else {
      cfg = Config::from_json(nlohmann::json::object(), ".");
    }
    if (!cache_mode.empty()) cfg.cache.mode = llm::parse_cache_mode(cache_mode);
    if (!average.empty()) cfg.evaluation.average = average;
    if (titles_only) cfg.evaluation.candidate = metrics::CandidateText::TitlesOnly;
    cfg.validate();
    Runtime rt(std::move(cfg));

    if (ingest->parsed()) {
      return cmd_ingest(rt, manifest.empty() ? rt.cfg.paths.corpus_manifest : std::filesystem::path(manifest), out, err);
    }
    if (index_cmd->parsed()) return cmd_index(rt, out);
    if (generate->parsed()) return cmd_generate(rt, target, baseline, final_model, report_out, out);
    if (evaluate->parsed()) return cmd_evaluate(rt, eval_manifest, scores_out, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace peerrisk::cli
