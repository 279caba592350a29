#pragma once

#include "peerrisk/index.hpp"
#include "peerrisk/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace peerrisk::metrics {

struct TokenSeq {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

/// Lowercase, split on every non-alphanumeric code point, drop empties.
/// No stemming and no stopword removal.
TokenSeq tokenize(std::string_view text);

struct Prf {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

/// 2pr / (p + r), or 0 when p + r == 0.
double f1_of(double precision, double recall);

/// Raw matched mass and totals behind a recall/precision pair. Summing these
/// across documents gives micro averages.
struct OverlapCounts {
  double recall_hits = 0.0;
  double ref_total = 0.0;
  double precision_hits = 0.0;
  double cand_total = 0.0;

  Prf prf() const;
  OverlapCounts& operator+=(const OverlapCounts& o);
};

OverlapCounts rouge_n_counts(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n);
/// Clipped n-gram overlap. Zeros when either side has no n-grams. n must be >= 1.
Prf rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
OverlapCounts rouge_l_counts(const TokenSeq& candidate, const TokenSeq& reference);
Prf rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

// ---------------------------------------------------------------------------
// BERTScore

class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  /// One vector per token, all of equal dimension. Sequence-level so contextual
  /// embedders can be plugged in.
  virtual std::vector<std::vector<double>> embed_tokens(const std::vector<std::string>& tokens) = 0;
};

/// Deterministic, non-contextual: the token and its boundary-marked character
/// trigrams hashed onto `dims` non-negative coordinates.
class HashedTokenEmbedder final : public TokenEmbedder {
 public:
  explicit HashedTokenEmbedder(std::size_t dims = 512) : dims_(dims) {}
  std::vector<std::vector<double>> embed_tokens(const std::vector<std::string>& tokens) override;

 private:
  std::size_t dims_;
};

/// Each distinct token gets its own basis vector (first-seen order). For tests.
class OneHotTokenEmbedder final : public TokenEmbedder {
 public:
  explicit OneHotTokenEmbedder(std::size_t capacity = 2048) : capacity_(capacity) {}
  std::vector<std::vector<double>> embed_tokens(const std::vector<std::string>& tokens) override;

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::unordered_map<std::string, std::size_t> vocab_;
};

/// Embeds each distinct token through a text embedding provider (cache-aware).
class ProviderTokenEmbedder final : public TokenEmbedder {
 public:
  explicit ProviderTokenEmbedder(index::Embedder& embedder) : embedder_(embedder) {}
  std::vector<std::vector<double>> embed_tokens(const std::vector<std::string>& tokens) override;

 private:
  index::Embedder& embedder_;
};

OverlapCounts bert_counts(const TokenSeq& candidate, const TokenSeq& reference, TokenEmbedder& embedder);
/// Greedy max-cosine matching, no IDF weighting, no baseline rescaling. Each
/// token's best similarity is clamped to [0, 1]. Zeros when either side is empty.
Prf bert_score(const TokenSeq& candidate, const TokenSeq& reference, TokenEmbedder& embedder);

// ---------------------------------------------------------------------------

struct EvalScores {
  Prf rouge1;
  Prf rouge2;
  Prf rougeL;
  Prf bert;
};

struct EvalCounts {
  OverlapCounts rouge1;
  OverlapCounts rouge2;
  OverlapCounts rougeL;
  OverlapCounts bert;

  EvalScores scores() const;
};

enum class CandidateText { FullText, TitlesOnly };

EvalCounts score_text_counts(std::string_view candidate, std::string_view reference, TokenEmbedder& embedder);
EvalScores score_text(std::string_view candidate, std::string_view reference, TokenEmbedder& embedder);

/// Throws EmptyReference for a blank reference.
EvalScores score_report(const pipeline::RiskReport& report, std::string_view reference_text, TokenEmbedder& embedder,
                        CandidateText source = CandidateText::FullText);
std::string candidate_text(const pipeline::RiskReport& report, CandidateText source);

/// Component-wise arithmetic mean. Throws EmptyList.
EvalScores macro_average(std::span<const EvalScores> scores);
/// Ratio of pooled counts. Throws EmptyList.
EvalScores micro_average(std::span<const EvalCounts> counts);

nlohmann::ordered_json to_json(const Prf& p);
nlohmann::ordered_json to_json(const EvalScores& s);

// ---------------------------------------------------------------------------

struct EvalManifestRow {
  std::string ticker;
  std::filesystem::path report_path;
  std::filesystem::path reference_path;
};

/// JSON Lines of {ticker, report_path, reference_path}; relative paths resolve
/// against the manifest's directory.
std::vector<EvalManifestRow> load_eval_manifest(const std::filesystem::path& path);

}  // namespace peerrisk::metrics
