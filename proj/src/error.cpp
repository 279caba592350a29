#include "peerrisk/error.hpp"

namespace peerrisk {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::EmptyDocument: return "EmptyDocument";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DuplicateChunk: return "DuplicateChunk";
    case ErrorKind::ModelMismatch: return "ModelMismatch";
    case ErrorKind::EmptyStore: return "EmptyStore";
    case ErrorKind::ProviderError: return "ProviderError";
    case ErrorKind::CacheMiss: return "CacheMiss";
    case ErrorKind::BadResponse: return "BadResponse";
    case ErrorKind::UnknownStage: return "UnknownStage";
    case ErrorKind::MissingBinding: return "MissingBinding";
    case ErrorKind::UnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorKind::NoPeers: return "NoPeers";
    case ErrorKind::TargetInPeers: return "TargetInPeers";
    case ErrorKind::NoDocuments: return "NoDocuments";
    case ErrorKind::EmptyExtraction: return "EmptyExtraction";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmbedderError: return "EmbedderError";
    case ErrorKind::EmptyReference: return "EmptyReference";
    case ErrorKind::EmptyList: return "EmptyList";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void rethrow_with_context(const Error& e, std::string_view context) {
  std::string msg = e.what();
  // Strip the "Kind: " prefix the constructor will add back.
  const auto prefix = std::string(to_string(e.kind())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  Error wrapped(e.kind(), "[" + std::string(context) + "] " + msg);
  wrapped.with_status(e.http_status());
  throw wrapped;
}

}  // namespace peerrisk
