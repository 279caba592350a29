#pragma once

#include "peerrisk/http.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace peerrisk::llm {

enum class ReasoningLevel { Low, Medium, High };

std::string_view to_string(ReasoningLevel level);
ReasoningLevel parse_reasoning_level(std::string_view s);

struct LlmRequest {
  std::string model;
  std::optional<std::string> system;
  std::string user;
  double temperature = 0.0;
  std::optional<int> max_output;
  std::optional<ReasoningLevel> reasoning_level;
};

/// Every semantic field, with object keys in sorted order; absent optionals are omitted.
nlohmann::json canonical_json(const LlmRequest& request);
/// SHA-256 hex of the canonical serialization.
std::string cache_key(const LlmRequest& request);

struct LlmExchange {
  LlmRequest request;
  std::string key;
  std::string response_text;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
  /// When the response was produced (UTC, ISO-8601). Replays return the recorded time.
  std::string created_at;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  /// Returns the assistant message text. Throws ProviderError / BadResponse.
  virtual std::string complete(const LlmRequest& request) = 0;
};

/// Chat-completions endpoint: {"model", "messages", "temperature", "reasoning_effort"?}
/// -> {"choices": [{"message": {"content": ...}}]}.
class HttpChatProvider final : public ChatProvider {
 public:
  HttpChatProvider(std::string url, std::string api_key, std::shared_ptr<http::Transport> transport,
                   http::RetryPolicy retry = {});
  std::string complete(const LlmRequest& request) override;
  std::size_t request_count() const { return requests_.load(); }

  static nlohmann::json request_body(const LlmRequest& request);
  /// Extracts choices[0].message.content; BadResponse when missing or empty.
  static std::string parse_content(const std::string& body);

 private:
  std::string url_;
  std::string api_key_;
  std::shared_ptr<http::Transport> transport_;
  http::RetryPolicy retry_;
  std::atomic<std::size_t> requests_{0};
};

// ---------------------------------------------------------------------------

struct CachedResponse {
  std::string response_text;
  std::string created_at;
};

/// Append-only JSON Lines file of {key, request, response_text, created_at}.
/// Later lines win when a key repeats. Without a path the cache is memory-only.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path file);

  std::optional<CachedResponse> get(const std::string& key) const;
  void put(const std::string& key, const LlmRequest& request, const CachedResponse& response);
  std::size_t size() const;
  const std::optional<std::filesystem::path>& path() const { return file_; }

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::shared_mutex read_mu_;
  std::mutex write_mu_;
  std::unordered_map<std::string, CachedResponse> entries_;
};

enum class CacheMode {
  Live,    // serve hits, call the provider on misses and record them
  Record,  // always call the provider, overwrite recordings
  Replay,  // cache only; misses raise CacheMiss
};

std::string_view to_string(CacheMode mode);
CacheMode parse_cache_mode(std::string_view s);

struct GatewayOptions {
  CacheMode mode = CacheMode::Live;
  std::size_t max_in_flight = 4;
  /// Returns the current UTC time as ISO-8601; defaults to the system clock.
  std::function<std::string()> clock;
};

std::string utc_now_iso8601();

class Gateway {
 public:
  /// `provider` may be null in Replay mode.
  Gateway(ChatProvider* provider, std::shared_ptr<ResponseCache> cache, GatewayOptions options = {});

  LlmExchange complete(const LlmRequest& request);

  /// Every exchange served so far, in completion order.
  std::vector<LlmExchange> ledger() const;
  void clear_ledger();
  std::size_t provider_calls() const { return provider_calls_.load(); }
  CacheMode mode() const { return options_.mode; }

 private:
  static constexpr std::ptrdiff_t kMaxSlots = 256;

  ChatProvider* provider_;
  std::shared_ptr<ResponseCache> cache_;
  GatewayOptions options_;
  std::counting_semaphore<kMaxSlots> slots_;
  std::atomic<std::size_t> provider_calls_{0};
  mutable std::mutex ledger_mu_;
  std::vector<LlmExchange> ledger_;
};

// ---------------------------------------------------------------------------
// Per-stage model selection

enum class Stage { Extraction, Aggregation, Final };

std::string_view to_string(Stage stage);
/// Throws UnknownStage.
Stage parse_stage(std::string_view s);

struct StageModel {
  std::string model;
  double temperature = 0.0;
  std::optional<ReasoningLevel> reasoning_level;
  std::optional<int> max_output;
};

/// Defaults: extraction on gpt-4.1-mini, aggregation on gpt-4.1, final on o3 at
/// medium reasoning effort. Temperatures default to 0.
struct StageConfig {
  StageModel extraction{"gpt-4.1-mini", 0.0, std::nullopt, std::nullopt};
  StageModel aggregation{"gpt-4.1", 0.0, std::nullopt, std::nullopt};
  StageModel final{"o3", 0.0, ReasoningLevel::Medium, std::nullopt};
};

/// Throws UnknownStage for values outside the enum.
const StageModel& stage_model(Stage stage, const StageConfig& config);

/// Final-stage settings for a model name: "o3" gets medium reasoning effort,
/// other models none. Temperature is carried over from `base`.
StageModel final_model_preset(std::string_view model, const StageModel& base = {});

LlmRequest make_request(const StageModel& stage, std::string user);

}  // namespace peerrisk::llm
