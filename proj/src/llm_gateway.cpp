#include "peerrisk/llm_gateway.hpp"

#include "peerrisk/error.hpp"
#include "peerrisk/text_util.hpp"

#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>

namespace peerrisk::llm {

using json = nlohmann::json;

std::string_view to_string(ReasoningLevel level) {
  switch (level) {
    case ReasoningLevel::Low: return "low";
    case ReasoningLevel::Medium: return "medium";
    case ReasoningLevel::High: return "high";
  }
  return "?";
}

ReasoningLevel parse_reasoning_level(std::string_view s) {
  const auto lower = text::to_lower_ascii(s);
  if (lower == "low") return ReasoningLevel::Low;
  if (lower == "medium") return ReasoningLevel::Medium;
  if (lower == "high") return ReasoningLevel::High;
  throw Error(ErrorKind::ConfigError, "unknown reasoning level '" + std::string(s) + "'");
}

json canonical_json(const LlmRequest& r) {
  // nlohmann::json objects are std::map backed, so keys serialize sorted.
  json j{{"model", r.model}, {"user", r.user}, {"temperature", r.temperature}};
  if (r.system) j["system"] = *r.system;
  if (r.max_output) j["max_output"] = *r.max_output;
  if (r.reasoning_level) j["reasoning_level"] = std::string(to_string(*r.reasoning_level));
  return j;
}

std::string cache_key(const LlmRequest& request) { return text::sha256_hex(canonical_json(request).dump()); }

// ---------------------------------------------------------------------------

HttpChatProvider::HttpChatProvider(std::string url, std::string api_key, std::shared_ptr<http::Transport> transport,
                                   http::RetryPolicy retry)
    : url_(std::move(url)), api_key_(std::move(api_key)), transport_(std::move(transport)), retry_(std::move(retry)) {}

json HttpChatProvider::request_body(const LlmRequest& r) {
  json messages = json::array();
  if (r.system) messages.push_back({{"role", "system"}, {"content", *r.system}});
  messages.push_back({{"role", "user"}, {"content", r.user}});
  json body{{"model", r.model}, {"messages", std::move(messages)}};
  // Reasoning models reject explicit sampling temperatures.
  if (r.reasoning_level) {
    body["reasoning_effort"] = std::string(to_string(*r.reasoning_level));
  } else {
    body["temperature"] = r.temperature;
  }
  if (r.max_output) body["max_completion_tokens"] = *r.max_output;
  return body;
}

std::string HttpChatProvider::parse_content(const std::string& body) {
  std::string content;
  try {
    const auto parsed = json::parse(body);
    const auto& c = parsed.at("choices").at(0).at("message").at("content");
    if (c.is_string()) content = c.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadResponse, std::string("malformed chat response: ") + e.what());
  }
  if (text::trim(content).empty()) throw Error(ErrorKind::BadResponse, "chat response has empty content");
  return content;
}

std::string HttpChatProvider::complete(const LlmRequest& request) {
  ++requests_;
  const auto resp = http::post_with_retry(*transport_, url_, http::bearer_headers(api_key_), request_body(request).dump(), retry_);
  return parse_content(resp.body);
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(*file_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      const auto row = json::parse(line);
      entries_[row.at("key").get<std::string>()] =
          CachedResponse{row.at("response_text").get<std::string>(), row.value("created_at", std::string{})};
    } catch (const json::exception&) {
      // Ignore a torn trailing line left by an interrupted writer.
    }
  }
}

std::optional<CachedResponse> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(read_mu_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const LlmRequest& request, const CachedResponse& response) {
  std::lock_guard write_lock(write_mu_);
  if (file_) {
    if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
    std::ofstream out(*file_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot append to response cache " + file_->string());
    const json row{{"key", key},
                   {"request", canonical_json(request)},
                   {"response_text", response.response_text},
                   {"created_at", response.created_at}};
    out << row.dump() << '\n';
    out.flush();
  }
  std::unique_lock lock(read_mu_);
  entries_[key] = response;
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(read_mu_);
  return entries_.size();
}

std::string_view to_string(CacheMode mode) {
  switch (mode) {
    case CacheMode::Live: return "live";
    case CacheMode::Record: return "record";
    case CacheMode::Replay: return "replay";
  }
  return "?";
}

CacheMode parse_cache_mode(std::string_view s) {
  const auto lower = text::to_lower_ascii(s);
  if (lower == "live") return CacheMode::Live;
  if (lower == "record") return CacheMode::Record;
  if (lower == "replay") return CacheMode::Replay;
  throw Error(ErrorKind::ConfigError, "unknown cache mode '" + std::string(s) + "'");
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Gateway::Gateway(ChatProvider* provider, std::shared_ptr<ResponseCache> cache, GatewayOptions options)
    : provider_(provider),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      options_(std::move(options)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_in_flight, 1, kMaxSlots))) {
  if (!options_.clock) options_.clock = utc_now_iso8601;
}

LlmExchange Gateway::complete(const LlmRequest& request) {
  if (text::trim(request.user).empty()) throw Error(ErrorKind::EmptyInput, "request has an empty user message");
  LlmExchange ex{request, cache_key(request), {}, 0, false, {}};

  std::optional<CachedResponse> hit;
  if (options_.mode != CacheMode::Record) hit = cache_->get(ex.key);
  if (hit) {
    ex.response_text = std::move(hit->response_text);
    ex.created_at = std::move(hit->created_at);
    ex.from_cache = true;
  } else if (options_.mode == CacheMode::Replay) {
    throw Error(ErrorKind::CacheMiss, "no recorded response for " + request.model + " request " + ex.key.substr(0, 12));
  } else {
    if (provider_ == nullptr) throw Error(ErrorKind::ConfigError, "no chat provider configured for a cache miss");
    slots_.acquire();
    struct Release {
      std::counting_semaphore<kMaxSlots>& s;
      ~Release() { s.release(); }
    } release{slots_};
    const auto started = std::chrono::steady_clock::now();
    ++provider_calls_;
    ex.response_text = provider_->complete(request);
    ex.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    if (text::trim(ex.response_text).empty()) throw Error(ErrorKind::BadResponse, "provider returned empty content");
    ex.created_at = options_.clock();
    cache_->put(ex.key, request, CachedResponse{ex.response_text, ex.created_at});
  }

  std::lock_guard lock(ledger_mu_);
  ledger_.push_back(ex);
  return ex;
}

std::vector<LlmExchange> Gateway::ledger() const {
  std::lock_guard lock(ledger_mu_);
  return ledger_;
}

void Gateway::clear_ledger() {
  std::lock_guard lock(ledger_mu_);
  ledger_.clear();
}

// ---------------------------------------------------------------------------

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Extraction: return "extraction";
    case Stage::Aggregation: return "aggregation";
    case Stage::Final: return "final";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  const auto lower = text::to_lower_ascii(s);
  if (lower == "extraction") return Stage::Extraction;
  if (lower == "aggregation") return Stage::Aggregation;
  if (lower == "final") return Stage::Final;
  throw Error(ErrorKind::UnknownStage, "unknown stage '" + std::string(s) + "'");
}

const StageModel& stage_model(Stage stage, const StageConfig& config) {
  switch (stage) {
    case Stage::Extraction: return config.extraction;
    case Stage::Aggregation: return config.aggregation;
    case Stage::Final: return config.final;
  }
  throw Error(ErrorKind::UnknownStage, "stage value " + std::to_string(static_cast<int>(stage)));
}

StageModel final_model_preset(std::string_view model, const StageModel& base) {
  StageModel out = base;
  out.model = std::string(model);
  const bool reasoning_family = model.size() >= 2 && model[0] == 'o' && std::isdigit(static_cast<unsigned char>(model[1]));
  out.reasoning_level = reasoning_family ? std::optional(base.reasoning_level.value_or(ReasoningLevel::Medium)) : std::nullopt;
  return out;
}

LlmRequest make_request(const StageModel& stage, std::string user) {
  LlmRequest r;
  r.model = stage.model;
  r.user = std::move(user);
  r.temperature = stage.temperature;
  r.max_output = stage.max_output;
  r.reasoning_level = stage.reasoning_level;
  return r;
}

}  // namespace peerrisk::llm
