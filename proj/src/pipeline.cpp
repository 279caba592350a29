#include "peerrisk/pipeline.hpp"

#include "peerrisk/error.hpp"
#include "peerrisk/text_util.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <regex>
#include <thread>
#include <unordered_set>

namespace peerrisk::pipeline {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void PeerSet::validate() const {
  if (peer_tickers.empty()) throw Error(ErrorKind::NoPeers, "peer set for " + target_ticker + " has no peers");
  std::unordered_set<std::string> seen;
  for (const auto& p : peer_tickers) {
    if (p == target_ticker) throw Error(ErrorKind::TargetInPeers, target_ticker + " is listed as its own peer");
    if (!seen.insert(p).second) {
      throw Error(ErrorKind::InvalidParams, "peer " + p + " listed twice for " + target_ticker);
    }
  }
}

std::map<std::string, PeerSet, std::less<>> parse_peer_sets(const json& root) {
  if (!root.is_object()) throw Error(ErrorKind::ConfigError, "peer-set file must be a JSON object");
  std::map<std::string, PeerSet, std::less<>> sets;
  for (const auto& [target, entry] : root.items()) {
    try {
      PeerSet ps{target, entry.value("sub_sector", std::string{}), entry.at("peers").get<std::vector<std::string>>()};
      sets.emplace(target, std::move(ps));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ConfigError, "peer set for " + target + ": " + e.what());
    }
  }
  return sets;
}

std::map<std::string, PeerSet, std::less<>> load_peer_sets(const std::filesystem::path& path) {
  try {
    return parse_peer_sets(json::parse(text::read_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, "malformed peer-set file " + path.string() + ": " + e.what());
  }
}

const PeerSet& find_peer_set(const std::map<std::string, PeerSet, std::less<>>& sets, std::string_view target) {
  const auto it = sets.find(target);
  if (it == sets.end()) throw Error(ErrorKind::NoPeers, "no peer set defined for " + std::string(target));
  return it->second;
}

std::string_view to_string(Mode mode) { return mode == Mode::Baseline ? "baseline" : "contrastive"; }

Mode parse_mode(std::string_view s) {
  const auto lower = text::to_lower_ascii(s);
  if (lower == "baseline") return Mode::Baseline;
  if (lower == "contrastive") return Mode::Contrastive;
  throw Error(ErrorKind::ConfigError, "unknown mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

ojson report_to_json(const RiskReport& r) {
  ojson items = ojson::array();
  for (const auto& it : r.items) items.push_back({{"rank", it.rank}, {"title", it.title}, {"rationale", it.rationale}});
  return ojson{{"ticker", r.ticker},
               {"mode", std::string(to_string(r.mode))},
               {"final_model", r.final_model},
               {"items", std::move(items)},
               {"full_text", r.full_text},
               {"warnings", r.warnings},
               {"created_at", r.created_at}};
}

RiskReport report_from_json(const json& j) {
  try {
    RiskReport r;
    r.ticker = j.at("ticker").get<std::string>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.final_model = j.value("final_model", std::string{});
    for (const auto& it : j.at("items")) {
      r.items.push_back(RiskItem{it.at("rank").get<int>(), it.at("title").get<std::string>(),
                                 it.value("rationale", std::string{})});
    }
    r.full_text = j.at("full_text").get<std::string>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.created_at = j.value("created_at", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed report JSON: ") + e.what());
  }
}

std::string serialize_report(const RiskReport& report) { return report_to_json(report).dump(2) + "\n"; }

RiskReport load_report(const std::filesystem::path& path) {
  try {
    return report_from_json(json::parse(text::read_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, "malformed report " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

bool is_empty_answer(std::string_view answer) {
  std::string core;
  for (const char c : answer) {
    if (std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80) {
      core.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (c == ' ' && !core.empty() && core.back() != ' ') {
      core.push_back(' ');
    }
  }
  while (!core.empty() && core.back() == ' ') core.pop_back();
  return core.empty() || core == "none" || core == "n a" || core == "na";
}

AggregatedRisk extract_impl(std::string_view ticker, const PipelineDeps& deps) {
  const auto docs = deps.corpus.documents_for(ticker);
  if (docs.empty()) throw Error(ErrorKind::NoDocuments, "no documents in corpus");
  const auto& meta = docs.front()->meta;

  const auto& query = deps.prompts.risk_query();
  const auto filter = index::make_filter(deps.corpus, std::string(ticker), deps.config.doc_kinds);
  const auto hits = index::query_top_k(deps.store, deps.embedder, query, deps.config.k, filter);

  std::vector<llm::LlmExchange> exchanges(hits.size());
  parallel_for(hits.size(), deps.config.extraction_workers, [&](std::size_t i) {
    const corpus::Chunk* chunk = deps.corpus.find_chunk(hits[i].chunk);
    if (chunk == nullptr) {
      throw Error(ErrorKind::InvalidParams,
                  "index references unknown chunk " + hits[i].chunk.doc_id + "#" + std::to_string(hits[i].chunk.seq));
    }
    const auto prompt = deps.prompts.render(
        prompts::TemplateId::Extraction,
        {{"name", meta.company_name}, {"ticker", meta.ticker}, {"industry", meta.industry}, {"data", chunk->text}});
    exchanges[i] = deps.gateway.complete(llm::make_request(deps.config.stages.extraction, prompt.rendered));
  });

  AggregatedRisk out;
  out.ticker = std::string(ticker);
  out.company_name = meta.company_name;
  out.industry = meta.industry;

  // {data} follows retrieval rank order.
  std::string data;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (is_empty_answer(exchanges[i].response_text)) continue;
    const auto* doc = deps.corpus.find_document(hits[i].chunk.doc_id);
    if (!data.empty()) data.append("\n\n");
    data += "[Source " + std::to_string(out.source_exchanges.size() + 1) + ": " +
            std::string(corpus::to_string(doc->meta.doc_kind)) + " " + doc->meta.period + "]\n" +
            std::string(text::trim(exchanges[i].response_text));
    out.source_exchanges.push_back(std::move(exchanges[i]));
  }
  if (out.source_exchanges.empty()) {
    throw Error(ErrorKind::EmptyExtraction, "all " + std::to_string(hits.size()) + " chunk extractions were empty");
  }
  out.chunk_count = out.source_exchanges.size();

  const auto prompt = deps.prompts.render(prompts::TemplateId::Aggregation, {{"name", meta.company_name},
                                                                             {"ticker", meta.ticker},
                                                                             {"industry", meta.industry},
                                                                             {"question", query},
                                                                             {"data", data}});
  out.aggregation = deps.gateway.complete(llm::make_request(deps.config.stages.aggregation, prompt.rendered));
  out.text = std::string(text::trim(out.aggregation.response_text));
  return out;
}

RiskReport finish_report(std::string_view ticker, Mode mode, const llm::LlmExchange& final) {
  RiskReport report;
  report.ticker = std::string(ticker);
  report.mode = mode;
  report.final_model = final.request.model;
  report.created_at = final.created_at;
  report.full_text = final.response_text;
  report.items = parse_risk_report(final.response_text);
  report.warnings = validate_item_count(report.items);
  return report;
}

}  // namespace

AggregatedRisk extract_company_risks(std::string_view ticker, const PipelineDeps& deps) {
  try {
    return extract_impl(ticker, deps);
  } catch (const Error& e) {
    rethrow_with_context(e, ticker);
  }
}

RiskReport run_baseline(std::string_view target, const PipelineDeps& deps) {
  const auto agg = extract_company_risks(target, deps);
  const auto prompt = deps.prompts.render(prompts::TemplateId::BaselineFinal, {{"target_company_name", agg.company_name},
                                                                               {"target_company_ticker", agg.ticker},
                                                                               {"industry", agg.industry},
                                                                               {"data", agg.text}});
  try {
    const auto final = deps.gateway.complete(llm::make_request(deps.config.stages.final, prompt.rendered));
    return finish_report(target, Mode::Baseline, final);
  } catch (const Error& e) {
    rethrow_with_context(e, target);
  }
}

RiskReport run_contrastive(const PeerSet& peer_set, const PipelineDeps& deps) {
  peer_set.validate();
  const auto target = extract_company_risks(peer_set.target_ticker, deps);
  std::vector<prompts::CompanyRisk> peers;
  peers.reserve(peer_set.peer_tickers.size());
  for (const auto& p : peer_set.peer_tickers) {
    const auto agg = extract_company_risks(p, deps);
    peers.push_back({agg.company_name, agg.ticker, agg.text});
  }
  const auto blocks = prompts::build_peer_blocks({target.company_name, target.ticker, target.text}, peers);
  const auto prompt = deps.prompts.render(
      prompts::TemplateId::Contrastive,
      {{"sub_sector", peer_set.sub_sector.empty() ? target.industry : peer_set.sub_sector},
       {"target_company_name", target.company_name},
       {"target_company_ticker", target.ticker},
       {"peer_blocks", blocks}});
  try {
    const auto final = deps.gateway.complete(llm::make_request(deps.config.stages.final, prompt.rendered));
    return finish_report(peer_set.target_ticker, Mode::Contrastive, final);
  } catch (const Error& e) {
    rethrow_with_context(e, peer_set.target_ticker);
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string strip_emphasis(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (s.front() == '*' || s.front() == '_')) s = text::trim(s.substr(1));
  while (!s.empty() && (s.back() == '*' || s.back() == '_')) s = text::trim(s.substr(0, s.size() - 1));
  return std::string(s);
}

void split_title(std::string_view body, RiskItem& item) {
  static constexpr std::string_view kSeps[] = {" — ", "—", " – ", " - ", ": "};
  std::size_t best = std::string_view::npos;
  std::size_t best_len = 0;
  for (const auto sep : kSeps) {
    const auto pos = body.find(sep);
    if (pos != std::string_view::npos && (pos < best || (pos == best && sep.size() > best_len))) {
      best = pos;
      best_len = sep.size();
    }
  }
  if (best == std::string_view::npos && body.ends_with(":")) {
    best = body.size() - 1;
    best_len = 1;
  }
  if (best == std::string_view::npos) {
    item.title = strip_emphasis(body);
    return;
  }
  item.title = strip_emphasis(body.substr(0, best));
  item.rationale = strip_emphasis(body.substr(best + best_len));
  if (item.title.empty()) std::swap(item.title, item.rationale);
}

}  // namespace

std::vector<RiskItem> parse_risk_report(std::string_view text) {
  static const std::regex kNumbered(R"(^\s*(?:#{1,6}\s*)?(?:\*\*)?(\d{1,3})[.)](?:\*\*)?\s+(\S.*)$)");
  static const std::regex kContinuation(R"(^(\s+|\s*[-*]\s).*)");
  std::vector<RiskItem> items;
  bool after_blank = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (text::trim(line).empty()) {
      after_blank = true;
      continue;
    }
    std::smatch m;
    if (std::regex_match(line, m, kNumbered)) {
      RiskItem item;
      item.rank = static_cast<int>(items.size() + 1);
      split_title(text::trim(m[2].str()), item);
      if (!item.title.empty()) items.push_back(std::move(item));
      after_blank = false;
      continue;
    }
    if (!items.empty() && (!after_blank || std::regex_match(line, kContinuation))) {
      auto& r = items.back().rationale;
      std::string_view extra = text::trim(line);
      if (extra.starts_with("- ") || extra.starts_with("* ")) extra.remove_prefix(2);
      if (!r.empty()) r.push_back(' ');
      r.append(strip_emphasis(extra));
    }
  }
  if (items.empty()) throw Error(ErrorKind::ParseError, "no numbered risk items found in final-stage output");
  return items;
}

std::vector<std::string> validate_item_count(const std::vector<RiskItem>& items) {
  std::vector<std::string> warnings;
  if (items.size() < 3 || items.size() > 5) {
    warnings.push_back("expected 3-5 risk items, got " + std::to_string(items.size()));
  }
  return warnings;
}

}  // namespace peerrisk::pipeline
