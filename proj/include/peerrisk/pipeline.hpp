#pragma once

#include "peerrisk/corpus.hpp"
#include "peerrisk/index.hpp"
#include "peerrisk/llm_gateway.hpp"
#include "peerrisk/prompts.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace peerrisk::pipeline {

/// A target company and the peers it is contrasted against.
struct PeerSet {
  std::string target_ticker;
  std::string sub_sector;
  std::vector<std::string> peer_tickers;

  /// NoPeers when empty, TargetInPeers when the target is listed, InvalidParams on duplicates.
  void validate() const;
};

/// {"TARGET": {"sub_sector": ..., "peers": [...]}, ...}
std::map<std::string, PeerSet, std::less<>> load_peer_sets(const std::filesystem::path& path);
std::map<std::string, PeerSet, std::less<>> parse_peer_sets(const nlohmann::json& root);
/// NoPeers when the target has no entry.
const PeerSet& find_peer_set(const std::map<std::string, PeerSet, std::less<>>& sets, std::string_view target);

struct AggregatedRisk {
  std::string ticker;
  std::string company_name;
  std::string industry;
  std::string text;
  std::vector<llm::LlmExchange> source_exchanges;  // extraction exchanges that fed aggregation
  llm::LlmExchange aggregation;
  std::size_t chunk_count = 0;
};

enum class Mode { Baseline, Contrastive };
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view s);

struct RiskItem {
  int rank = 0;
  std::string title;
  std::string rationale;

  bool operator==(const RiskItem&) const = default;
};

struct RiskReport {
  std::string ticker;
  Mode mode = Mode::Baseline;
  std::vector<RiskItem> items;
  std::string final_model;
  std::string created_at;
  std::string full_text;
  std::vector<std::string> warnings;
};

nlohmann::ordered_json report_to_json(const RiskReport& report);
RiskReport report_from_json(const nlohmann::json& j);
/// Pretty-printed JSON with a trailing newline; byte-stable for equal reports.
std::string serialize_report(const RiskReport& report);
RiskReport load_report(const std::filesystem::path& path);

struct PipelineConfig {
  std::size_t k = 20;
  llm::StageConfig stages;
  std::set<corpus::DocKind> doc_kinds;  // empty: every kind
  std::size_t extraction_workers = 4;
};

struct PipelineDeps {
  const corpus::Corpus& corpus;
  const index::VectorStore& store;
  index::Embedder& embedder;
  llm::Gateway& gateway;
  const prompts::PromptLibrary& prompts;
  PipelineConfig config;
};

/// Retrieval, per-chunk extraction and aggregation for one company.
/// Errors are re-raised with the ticker prefixed to the message.
AggregatedRisk extract_company_risks(std::string_view ticker, const PipelineDeps& deps);

/// Final stage over the target's aggregated risks alone.
RiskReport run_baseline(std::string_view target, const PipelineDeps& deps);

/// Final stage over the target's and every peer's aggregated risks.
RiskReport run_contrastive(const PeerSet& peer_set, const PipelineDeps& deps);

/// Numbered lines ("1." or "1)") with an optional "-", "–", "—" or ":" separator
/// between title and rationale. Ranks are renumbered 1..n. ParseError when none found.
std::vector<RiskItem> parse_risk_report(std::string_view text);

/// Warnings for item counts outside the requested 3–5 range.
std::vector<std::string> validate_item_count(const std::vector<RiskItem>& items);

}  // namespace peerrisk::pipeline
