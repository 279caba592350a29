#include "peerrisk/metrics.hpp"

#include "peerrisk/error.hpp"
#include "peerrisk/text_util.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace peerrisk::metrics {

using ojson = nlohmann::ordered_json;

TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  if (!text::is_valid_utf8(text)) throw Error(ErrorKind::DecodeError, "metric input is not valid UTF-8");
  std::string current;
  for (const char32_t cp : text::decode_utf8(text)) {
    if (u_isalnum(static_cast<UChar32>(cp))) {
      text::append_utf8(current, static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp))));
    } else if (!current.empty()) {
      seq.tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) seq.tokens.push_back(std::move(current));
  return seq;
}

double f1_of(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Prf OverlapCounts::prf() const {
  Prf p;
  p.recall = ref_total > 0.0 ? recall_hits / ref_total : 0.0;
  p.precision = cand_total > 0.0 ? precision_hits / cand_total : 0.0;
  p.f1 = f1_of(p.precision, p.recall);
  return p;
}

OverlapCounts& OverlapCounts::operator+=(const OverlapCounts& o) {
  recall_hits += o.recall_hits;
  ref_total += o.ref_total;
  precision_hits += o.precision_hits;
  cand_total += o.cand_total;
  return *this;
}

namespace {

std::map<std::string, std::size_t> ngram_counts(const TokenSeq& seq, std::size_t n) {
  std::map<std::string, std::size_t> counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::string key = seq.tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key.append(seq.tokens[i + j]);
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

OverlapCounts rouge_n_counts(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidParams, "ROUGE-N needs n >= 1");
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  const double cand_total = candidate.size() >= n ? static_cast<double>(candidate.size() - n + 1) : 0.0;
  const double ref_total = reference.size() >= n ? static_cast<double>(reference.size() - n + 1) : 0.0;
  double overlap = 0.0;
  for (const auto& [gram, c] : cand) {
    const auto it = ref.find(gram);
    if (it != ref.end()) overlap += static_cast<double>(std::min(c, it->second));
  }
  return OverlapCounts{overlap, ref_total, overlap, cand_total};
}

Prf rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n) {
  return rouge_n_counts(candidate, reference, n).prf();
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

OverlapCounts rouge_l_counts(const TokenSeq& candidate, const TokenSeq& reference) {
  const auto l = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  return OverlapCounts{l, static_cast<double>(reference.size()), l, static_cast<double>(candidate.size())};
}

Prf rouge_l(const TokenSeq& candidate, const TokenSeq& reference) { return rouge_l_counts(candidate, reference).prf(); }

// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 1469598103934665603ULL) {
  std::uint64_t h = seed;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::vector<double>> unit_vectors(std::vector<std::vector<double>> vectors, std::size_t expected) {
  if (vectors.size() != expected) {
    throw Error(ErrorKind::EmbedderError,
                "embedder returned " + std::to_string(vectors.size()) + " vectors for " + std::to_string(expected) + " tokens");
  }
  if (vectors.empty()) return vectors;
  const std::size_t dims = vectors.front().size();
  for (auto& v : vectors) {
    if (v.size() != dims) throw Error(ErrorKind::DimensionMismatch, "token vectors differ in dimension");
    double sq = 0.0;
    for (const double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorKind::EmbedderError, "non-finite token embedding");
      sq += x * x;
    }
    if (!(sq > 0.0)) throw Error(ErrorKind::EmbedderError, "zero-norm token embedding");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
  }
  return vectors;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double greedy_sum(const std::vector<std::vector<double>>& from, const std::vector<std::vector<double>>& to) {
  double total = 0.0;
  for (const auto& f : from) {
    double best = -1.0;
    for (const auto& t : to) best = std::max(best, dot(f, t));
    total += std::clamp(best, 0.0, 1.0);
  }
  return total;
}

}  // namespace

std::vector<std::vector<double>> HashedTokenEmbedder::embed_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    std::vector<double> v(dims_, 0.0);
    v[fnv1a(tok) % dims_] += 2.0;
    const std::string marked = "^" + tok + "$";
    for (std::size_t i = 0; i + 3 <= marked.size(); ++i) {
      v[fnv1a(std::string_view(marked).substr(i, 3), 0x9E3779B97F4A7C15ULL) % dims_] += 1.0;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> OneHotTokenEmbedder::embed_tokens(const std::vector<std::string>& tokens) {
  std::lock_guard lock(mu_);
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto [it, inserted] = vocab_.try_emplace(tok, vocab_.size());
    if (it->second >= capacity_) {
      vocab_.erase(it);
      throw Error(ErrorKind::EmbedderError, "one-hot vocabulary capacity " + std::to_string(capacity_) + " exceeded");
    }
    std::vector<double> v(capacity_, 0.0);
    v[it->second] = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> ProviderTokenEmbedder::embed_tokens(const std::vector<std::string>& tokens) {
  std::vector<std::string> distinct(tokens.begin(), tokens.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::unordered_map<std::string, std::vector<double>> lookup;
  try {
    auto vectors = embedder_.embed_many(distinct);
    for (std::size_t i = 0; i < distinct.size(); ++i) lookup.emplace(distinct[i], std::move(vectors[i].values));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CacheMiss) throw;
    throw Error(ErrorKind::EmbedderError, e.what());
  }
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lookup.at(t));
  return out;
}

OverlapCounts bert_counts(const TokenSeq& candidate, const TokenSeq& reference, TokenEmbedder& embedder) {
  if (candidate.empty() || reference.empty()) {
    return OverlapCounts{0.0, static_cast<double>(reference.size()), 0.0, static_cast<double>(candidate.size())};
  }
  const auto cand = unit_vectors(embedder.embed_tokens(candidate.tokens), candidate.size());
  const auto ref = unit_vectors(embedder.embed_tokens(reference.tokens), reference.size());
  if (cand.front().size() != ref.front().size()) {
    throw Error(ErrorKind::DimensionMismatch, "candidate and reference token vectors differ in dimension");
  }
  return OverlapCounts{greedy_sum(ref, cand), static_cast<double>(ref.size()), greedy_sum(cand, ref),
                       static_cast<double>(cand.size())};
}

Prf bert_score(const TokenSeq& candidate, const TokenSeq& reference, TokenEmbedder& embedder) {
  return bert_counts(candidate, reference, embedder).prf();
}

// ---------------------------------------------------------------------------

EvalScores EvalCounts::scores() const { return EvalScores{rouge1.prf(), rouge2.prf(), rougeL.prf(), bert.prf()}; }

EvalCounts score_text_counts(std::string_view candidate, std::string_view reference, TokenEmbedder& embedder) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  return EvalCounts{rouge_n_counts(cand, ref, 1), rouge_n_counts(cand, ref, 2), rouge_l_counts(cand, ref),
                    bert_counts(cand, ref, embedder)};
}

EvalScores score_text(std::string_view candidate, std::string_view reference, TokenEmbedder& embedder) {
  return score_text_counts(candidate, reference, embedder).scores();
}

std::string candidate_text(const pipeline::RiskReport& report, CandidateText source) {
  if (source == CandidateText::FullText) return report.full_text;
  std::string out;
  for (const auto& item : report.items) {
    if (!out.empty()) out.push_back('\n');
    out.append(item.title);
  }
  return out;
}

EvalScores score_report(const pipeline::RiskReport& report, std::string_view reference_text, TokenEmbedder& embedder,
                        CandidateText source) {
  if (text::trim(reference_text).empty()) {
    throw Error(ErrorKind::EmptyReference, "reference text for " + report.ticker + " is empty");
  }
  return score_text(candidate_text(report, source), reference_text, embedder);
}

EvalScores macro_average(std::span<const EvalScores> scores) {
  if (scores.empty()) throw Error(ErrorKind::EmptyList, "nothing to average");
  EvalScores sum;
  const auto add = [](Prf& acc, const Prf& p) {
    acc.recall += p.recall;
    acc.precision += p.precision;
    acc.f1 += p.f1;
  };
  for (const auto& s : scores) {
    add(sum.rouge1, s.rouge1);
    add(sum.rouge2, s.rouge2);
    add(sum.rougeL, s.rougeL);
    add(sum.bert, s.bert);
  }
  const double n = static_cast<double>(scores.size());
  for (Prf* p : {&sum.rouge1, &sum.rouge2, &sum.rougeL, &sum.bert}) {
    p->recall /= n;
    p->precision /= n;
    p->f1 /= n;
  }
  return sum;
}

EvalScores micro_average(std::span<const EvalCounts> counts) {
  if (counts.empty()) throw Error(ErrorKind::EmptyList, "nothing to average");
  EvalCounts pooled;
  for (const auto& c : counts) {
    pooled.rouge1 += c.rouge1;
    pooled.rouge2 += c.rouge2;
    pooled.rougeL += c.rougeL;
    pooled.bert += c.bert;
  }
  return pooled.scores();
}

ojson to_json(const Prf& p) { return ojson{{"recall", p.recall}, {"precision", p.precision}, {"f1", p.f1}}; }

ojson to_json(const EvalScores& s) {
  return ojson{{"rouge1", to_json(s.rouge1)}, {"rouge2", to_json(s.rouge2)}, {"rougeL", to_json(s.rougeL)}, {"bert", to_json(s.bert)}};
}

std::vector<EvalManifestRow> load_eval_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open evaluation manifest " + path.string());
  const auto base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path fp = p;
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<EvalManifestRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto row = nlohmann::json::parse(line);
      rows.push_back(EvalManifestRow{row.at("ticker").get<std::string>(), resolve(row.at("report_path").get<std::string>()),
                                     resolve(row.at("reference_path").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ConfigError, "evaluation manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace peerrisk::metrics
