#include "peerrisk/mock_chat.hpp"

#include "peerrisk/text_util.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

namespace peerrisk::llm {

namespace {

constexpr std::string_view kDataOpen = "\n\nData: ";
constexpr std::string_view kDataClose = "\n\nTask: List the Major Risks";
constexpr std::string_view kAnswersOpen = "\n\nAnalysts answers: ";
constexpr std::string_view kAnswersClose = "\n\nThe given data is retrieved";
constexpr std::string_view kRiskInfoOpen = "Here is the risk information:\n\n";
constexpr std::string_view kRiskInfoClose = "\n\nOnly give the risks for the company ";

const std::unordered_set<std::string_view>& stopwords() {
  // Common English function words plus the mock's own answer vocabulary, so
  // later stages do not promote it to a "risk".
  static const std::unordered_set<std::string_view> kStop = {
      "about", "above", "after", "again", "against", "also", "among", "and", "another", "any", "are", "been",
      "before", "being", "below", "between", "both", "but", "can", "could", "does", "doing", "down", "during",
      "each", "either", "even", "ever", "every", "few", "for", "from", "further", "had", "has", "have", "having",
      "here", "hers", "herself", "himself", "into", "its", "itself", "just", "less", "more", "most", "much", "must",
      "might", "near", "need", "none", "nor", "not", "now", "off", "often", "once", "only", "other", "others", "ours",
      "over", "same", "shall", "should", "since", "some", "such", "than", "that", "their", "theirs", "them",
      "themselves", "then", "there", "these", "they", "this", "those", "through", "under", "until", "upon", "very",
      "were", "what", "when", "where", "whether", "which", "while", "whom", "whose", "will", "with", "within",
      "without", "would", "your", "yours", "year", "years", "quarter", "company", "companies", "including",
      "result", "results", "could", "may", "our", "we", "us", "per", "cent", "percent", "million", "billion",
      "approximately", "certain", "significant", "significantly", "material", "materially", "adversely", "affect",
      "affected", "impact", "business", "operations", "financial", "condition", "risk", "risks", "factors",
      "exposure", "excerpt", "mentions", "mentioned", "time", "times", "source", "sources", "chunk", "aggregated",
      "across", "peers", "peer", "discussion", "appears", "target", "information", "relevant", "analyst", "chief", "executive", "officer", "operator"};
  return kStop;
}

std::string_view between(std::string_view text, std::string_view open, std::string_view close) {
  const auto b = text.find(open);
  if (b == std::string_view::npos) return {};
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  return text.substr(start, e == std::string_view::npos ? std::string_view::npos : e - start);
}

std::string title_case(std::string_view word) {
  std::string out(word);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

struct Block {
  std::string ticker;
  std::string text;
};

// Splits "Name (TICK): text" blocks. A block header is a line that starts after a
// blank line (or at the beginning) and contains "(" TICKER "): ".
std::vector<Block> split_blocks(std::string_view info) {
  std::vector<Block> blocks;
  std::size_t pos = 0;
  while (pos <= info.size()) {
    const auto line_end = info.find('\n', pos);
    const auto line = info.substr(pos, line_end == std::string_view::npos ? std::string_view::npos : line_end - pos);
    const bool at_block_start = pos == 0 || (pos >= 2 && info.substr(pos - 2, 2) == "\n\n");
    const auto close = line.find("): ");
    const auto open = close == std::string_view::npos ? std::string_view::npos : line.rfind(" (", close);
    if (at_block_start && open != std::string_view::npos) {
      const auto ticker = line.substr(open + 2, close - open - 2);
      const bool ticker_like = !ticker.empty() && std::all_of(ticker.begin(), ticker.end(), [](char c) {
        return std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-';
      });
      if (ticker_like) {
        blocks.push_back(Block{std::string(ticker), std::string(line.substr(close + 3))});
        pos = line_end == std::string_view::npos ? info.size() + 1 : line_end + 1;
        continue;
      }
    }
    if (!blocks.empty()) {
      blocks.back().text.push_back('\n');
      blocks.back().text.append(line);
    }
    if (line_end == std::string_view::npos) break;
    pos = line_end + 1;
  }
  return blocks;
}

}  // namespace

std::vector<std::pair<std::string, std::size_t>> salient_terms(std::string_view text) {
  std::map<std::string, std::size_t> counts;
  std::string word;
  const auto flush = [&] {
    if (word.size() >= 4 && !stopwords().contains(word)) ++counts[word];
    word.clear();
  };
  for (const char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

std::string MockChatProvider::complete(const LlmRequest& request) {
  ++calls_;
  const std::string_view prompt = request.user;
  if (prompt.find(kDataClose) != std::string_view::npos) return extraction_answer(between(prompt, kDataOpen, kDataClose));
  if (prompt.find(kAnswersClose) != std::string_view::npos) {
    return aggregation_answer(between(prompt, kAnswersOpen, kAnswersClose));
  }
  if (prompt.find(kRiskInfoClose) != std::string_view::npos) return final_answer(prompt);
  return "ECHO: " + std::string(prompt.substr(0, 200));
}

std::string MockChatProvider::extraction_answer(std::string_view data) const {
  const auto terms = salient_terms(data);
  if (terms.empty()) return "- No specific risk information in this text.";
  std::string out;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, terms.size()); ++i) {
    const auto& [term, n] = terms[i];
    out += "- " + title_case(term) + " exposure: the text mentions \"" + term + "\" " + std::to_string(n) + " time(s).\n";
  }
  out.pop_back();
  return out;
}

std::string MockChatProvider::aggregation_answer(std::string_view data) const {
  const auto terms = salient_terms(data);
  if (terms.empty()) return "No specific risks identified.";
  std::string out = "Key risk themes across sources:";
  for (std::size_t i = 0; i < std::min<std::size_t>(6, terms.size()); ++i) {
    const auto& [term, n] = terms[i];
    out += "\n- " + title_case(term) + " exposure (" + std::to_string(n) + " mentions across sources)";
  }
  return out;
}

std::string MockChatProvider::final_answer(std::string_view prompt) const {
  const auto tail = prompt.substr(prompt.find(kRiskInfoClose) + kRiskInfoClose.size());
  const auto open = tail.find(" (");
  const auto close = tail.find(").", open == std::string_view::npos ? 0 : open);
  const std::string target_ticker =
      open == std::string_view::npos || close == std::string_view::npos ? "" : std::string(tail.substr(open + 2, close - open - 2));

  const auto blocks = split_blocks(between(prompt, kRiskInfoOpen, kRiskInfoClose));
  std::string target_text;
  std::set<std::string> peer_terms;
  std::size_t peer_count = 0;
  for (const auto& b : blocks) {
    if (b.ticker == target_ticker) {
      target_text += b.text + "\n";
    } else {
      ++peer_count;
      for (const auto& [term, n] : salient_terms(b.text)) peer_terms.insert(term);
    }
  }
  auto terms = salient_terms(target_text);
  // Distinctive terms first; the sort is stable so frequency order is kept within each group.
  std::stable_sort(terms.begin(), terms.end(), [&](const auto& a, const auto& b) {
    return !peer_terms.contains(a.first) && peer_terms.contains(b.first);
  });
  static const std::vector<std::string> kFallback = {"execution", "competition", "macroeconomic", "regulation", "liquidity"};
  for (const auto& f : kFallback) {
    if (terms.size() >= final_items_) break;
    if (std::none_of(terms.begin(), terms.end(), [&](const auto& t) { return t.first == f; })) terms.emplace_back(f, 0);
  }
  std::string out;
  for (std::size_t i = 0; i < std::min(final_items_, terms.size()); ++i) {
    const auto& [term, n] = terms[i];
    out += std::to_string(i + 1) + ". " + title_case(term) + " Risk — " + (target_ticker.empty() ? "the company" : target_ticker) +
           " disclosures cite " + term + " " + std::to_string(n) + " time(s)";
    if (peer_count > 0) out += peer_terms.contains(term) ? ", a theme shared with peers" : ", unlike its peers";
    out += ".\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace peerrisk::llm
