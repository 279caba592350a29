#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace peerrisk::corpus {

enum class DocKind { TenK, TenQ, Transcript };

std::string_view to_string(DocKind kind);
/// Accepts "10-K"/"10-Q"/"transcript" as well as the enum spellings, case-insensitively.
DocKind parse_doc_kind(std::string_view s);

struct DocumentMeta {
  std::string doc_id;
  std::string ticker;
  std::string company_name;
  std::string industry;
  DocKind doc_kind = DocKind::TenK;
  std::string period;  // ISO-8601 date
};

struct Document {
  DocumentMeta meta;
  std::string text;  // normalized plain text

  const std::string& doc_id() const { return meta.doc_id; }
  const std::string& ticker() const { return meta.ticker; }
};

/// Word window over a parent document; [start_word, end_word).
struct Chunk {
  std::string doc_id;
  std::size_t seq = 0;
  std::string text;
  std::size_t start_word = 0;
  std::size_t end_word = 0;

  std::size_t word_count() const { return end_word - start_word; }
};

/// Lightweight reference to a chunk; the ordering is the retrieval tie-break order.
struct ChunkKey {
  std::string doc_id;
  std::size_t seq = 0;

  auto operator<=>(const ChunkKey&) const = default;
};

struct ChunkingParams {
  std::size_t size_words = 350;
  std::size_t overlap_words = 50;
};

/// True when the bytes look like markup (contain something shaped like a tag).
bool looks_like_html(std::string_view raw);

/// Tag stripping, entity decoding and script/style removal. Input must be valid UTF-8.
std::string strip_html(std::string_view html);

/// NFC, control-character removal and whitespace collapsing on plain UTF-8 text.
std::string normalize_text(std::string_view plain);

/// Throws DecodeError for invalid UTF-8 and EmptyDocument when nothing survives
/// normalization. Metadata is copied verbatim.
Document ingest_document(std::string_view raw_bytes, DocumentMeta meta);

/// Chunk i starts at i * (size - overlap); the last chunk may be shorter.
/// Throws InvalidParams when overlap >= size or size == 0.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t size_words, std::size_t overlap_words);
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingParams& params);

/// Expected chunk count: ceil(max(N - v, 1) / (s - v)).
std::size_t expected_chunk_count(std::size_t words, std::size_t size_words, std::size_t overlap_words);

// ---------------------------------------------------------------------------
// Manifest and on-disk corpus store

struct ManifestEntry {
  DocumentMeta meta;
  std::filesystem::path path;  // resolved against the manifest's directory
};

/// JSON Lines; blank lines are skipped. Throws ConfigError on malformed rows.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_path);

/// Ingested documents plus their chunks, keyed for lookup by ticker and chunk key.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(ChunkingParams params) : params_(params) {}

  /// Chunks the document and adds both. Throws InvalidParams on a repeated doc_id.
  const std::vector<Chunk>& add(Document doc);

  const ChunkingParams& params() const { return params_; }
  const std::vector<Document>& documents() const { return documents_; }
  std::vector<const Document*> documents_for(std::string_view ticker) const;
  const Document* find_document(std::string_view doc_id) const;
  const std::vector<Chunk>& chunks_of(std::string_view doc_id) const;
  const Chunk* find_chunk(const ChunkKey& key) const;
  std::vector<const Chunk*> all_chunks() const;
  std::size_t chunk_count() const;
  bool empty() const { return documents_.empty(); }

  void save(const std::filesystem::path& path) const;
  static Corpus load(const std::filesystem::path& path);

 private:
  ChunkingParams params_;
  std::vector<Document> documents_;
  std::map<std::string, std::vector<Chunk>, std::less<>> chunks_;
};

}  // namespace peerrisk::corpus
