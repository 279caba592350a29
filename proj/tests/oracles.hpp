#pragma once

// Brute-force reference implementations used by property tests and the
// acceptance runner. Deliberately naive; none of this shares code with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Prf {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

inline Prf make_prf(double r, double p) {
  Prf out{r, p, 0.0};
  out.f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  return out;
}

inline std::vector<std::vector<std::string>> ngrams(const std::vector<std::string>& s, std::size_t n) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.begin() + i, s.begin() + i + n);
  return out;
}

/// Multiset intersection by repeatedly striking matched grams out of a copy.
inline Prf rouge_n(const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::size_t n) {
  const auto cg = ngrams(cand, n);
  auto rg = ngrams(ref, n);
  if (cg.empty() || rg.empty()) return {};
  const double ref_total = static_cast<double>(rg.size());
  std::size_t overlap = 0;
  for (const auto& g : cg) {
    const auto it = std::find(rg.begin(), rg.end(), g);
    if (it != rg.end()) {
      rg.erase(it);
      ++overlap;
    }
  }
  return make_prf(overlap / ref_total, overlap / static_cast<double>(cg.size()));
}

/// Full-table LCS.
inline std::size_t lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

inline Prf rouge_l(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return {};
  const double l = static_cast<double>(lcs(cand, ref));
  return make_prf(l / ref.size(), l / cand.size());
}

/// Fraction of reference tokens that occur anywhere in the candidate.
inline double coverage(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const std::set<std::string> present(cand.begin(), cand.end());
  std::size_t hit = 0;
  for (const auto& r : ref) hit += present.count(r);
  return static_cast<double>(hit) / ref.size();
}

inline long double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct Scored {
  std::string doc_id;
  std::size_t seq;
  double score;
};

/// Scores every row, sorts the whole list (score rounded to 1e-12 desc, then
/// doc_id, seq), keeps k.
inline std::vector<Scored> top_k(const std::vector<std::pair<std::pair<std::string, std::size_t>, std::vector<double>>>& rows,
                                 const std::vector<double>& query, std::size_t k) {
  std::vector<Scored> all;
  for (const auto& [key, vec] : rows) all.push_back({key.first, key.second, static_cast<double>(cosine(query, vec))});
  std::sort(all.begin(), all.end(), [](const Scored& x, const Scored& y) {
    const long double rx = std::round(static_cast<long double>(x.score) * 1e12L);
    const long double ry = std::round(static_cast<long double>(y.score) * 1e12L);
    if (rx != ry) return rx > ry;
    if (x.doc_id != y.doc_id) return x.doc_id < y.doc_id;
    return x.seq < y.seq;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

// ---------------------------------------------------------------------------
// Generators

inline std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t max_len, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::vector<std::string> out(len(rng));
  for (auto& t : out) t = "w" + std::to_string(pick(rng));
  return out;
}

inline std::vector<double> random_vector(std::mt19937& rng, std::size_t dims) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dims);
  for (auto& x : v) x = g(rng);
  return v;
}

/// Text of 1..max_words words from a small vocabulary, so ties and repeats occur.
inline std::string random_text(std::mt19937& rng, std::size_t max_words, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len(1, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::string s;
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += "term" + std::to_string(pick(rng));
  }
  return s;
}

}  // namespace oracle
