#pragma once

#include "peerrisk/llm_gateway.hpp"

#include <atomic>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace peerrisk::llm {

/// Offline chat provider with deterministic, prompt-derived answers. It
/// recognises the pipeline's four prompt shapes by their fixed wording:
///   extraction  -> salient terms of the chunk as "- Term exposure: ..." lines
///   aggregation -> merged term list across the analysts' answers
///   final       -> numbered "N. Title — rationale" list; in contrastive prompts,
///                  terms the peers do not mention rank first
/// Anything else is echoed back with an "ECHO: " prefix.
class MockChatProvider final : public ChatProvider {
 public:
  explicit MockChatProvider(std::size_t final_items = 4) : final_items_(final_items) {}

  std::string complete(const LlmRequest& request) override;
  std::size_t call_count() const { return calls_.load(); }

 private:
  std::string extraction_answer(std::string_view data) const;
  std::string aggregation_answer(std::string_view data) const;
  std::string final_answer(std::string_view prompt) const;

  std::size_t final_items_;
  std::atomic<std::size_t> calls_{0};
};

/// Lowercased alphabetic terms of length >= 4 that are not stopwords, ranked by
/// frequency then alphabetically. Exposed for tests.
std::vector<std::pair<std::string, std::size_t>> salient_terms(std::string_view text);

}  // namespace peerrisk::llm
