#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace peerrisk {

enum class ErrorKind {
  // corpus
  DecodeError,
  EmptyDocument,
  InvalidParams,
  // index
  DimensionMismatch,
  ZeroNorm,
  EmptyInput,
  DuplicateChunk,
  ModelMismatch,
  EmptyStore,
  // llm gateway
  ProviderError,
  CacheMiss,
  BadResponse,
  UnknownStage,
  // prompts
  MissingBinding,
  UnknownPlaceholder,
  NoPeers,
  TargetInPeers,
  // pipeline
  NoDocuments,
  EmptyExtraction,
  ParseError,
  // metrics
  EmbedderError,
  EmptyReference,
  EmptyList,
  // plumbing
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library. Callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  /// HTTP status for ProviderError, 0 otherwise (or when the transport failed).
  int http_status() const noexcept { return http_status_; }
  Error& with_status(int status) {
    http_status_ = status;
    return *this;
  }

 private:
  ErrorKind kind_;
  int http_status_ = 0;
};

/// Rethrows `e` with "[context] " prefixed to its message, keeping kind and status.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view context);

}  // namespace peerrisk
