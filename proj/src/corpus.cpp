#include "peerrisk/corpus.hpp"

#include "peerrisk/error.hpp"
#include "peerrisk/text_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

namespace peerrisk::corpus {

using json = nlohmann::ordered_json;

std::string_view to_string(DocKind kind) {
  switch (kind) {
    case DocKind::TenK: return "10-K";
    case DocKind::TenQ: return "10-Q";
    case DocKind::Transcript: return "transcript";
  }
  return "?";
}

DocKind parse_doc_kind(std::string_view s) {
  const std::string lower = text::to_lower_ascii(s);
  if (lower == "10-k" || lower == "10k" || lower == "tenk") return DocKind::TenK;
  if (lower == "10-q" || lower == "10q" || lower == "tenq") return DocKind::TenQ;
  if (lower == "transcript" || lower == "earnings_call" || lower == "earnings-call") return DocKind::Transcript;
  throw Error(ErrorKind::InvalidParams, "unknown doc_kind '" + std::string(s) + "'");
}

namespace {

bool iequals_prefix(std::string_view haystack, std::size_t pos, std::string_view needle) {
  if (pos + needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i < needle.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(haystack[pos + i])) != needle[i]) return false;
  }
  return true;
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    if (iequals_prefix(haystack, i, needle)) return i;
  }
  return std::string_view::npos;
}

bool is_inline_tag(std::string_view name) {
  static const std::unordered_set<std::string_view> kInline = {
      "a",    "abbr",  "b",      "bdi",    "bdo", "big", "cite", "code", "del", "em",  "font", "i",  "ins",
      "kbd",  "mark",  "q",      "s",      "samp", "small", "span", "strike", "strong", "sub", "sup", "u", "var",
      "ix:nonnumeric", "ix:nonfraction"};
  return kInline.contains(name);
}

// Windows-1252 code points for numeric references in 0x80..0x9F, which legacy
// filings use for curly quotes and dashes.
char32_t cp1252(char32_t cp) {
  static constexpr std::array<char32_t, 32> kMap = {
      0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
      0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD, 0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
      0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};
  if (cp >= 0x80 && cp <= 0x9F) return kMap[cp - 0x80];
  return cp;
}

const std::unordered_map<std::string_view, char32_t>& named_entities() {
  static const std::unordered_map<std::string_view, char32_t> kEntities = {
      {"nbsp", 0x00A0},  {"amp", '&'},       {"lt", '<'},         {"gt", '>'},        {"quot", '"'},
      {"apos", '\''},    {"mdash", 0x2014},  {"ndash", 0x2013},   {"rsquo", 0x2019},  {"lsquo", 0x2018},
      {"rdquo", 0x201D}, {"ldquo", 0x201C},  {"sbquo", 0x201A},   {"bdquo", 0x201E},  {"hellip", 0x2026},
      {"copy", 0x00A9},  {"reg", 0x00AE},    {"trade", 0x2122},   {"bull", 0x2022},   {"middot", 0x00B7},
      {"sect", 0x00A7},  {"para", 0x00B6},   {"deg", 0x00B0},     {"cent", 0x00A2},   {"pound", 0x00A3},
      {"euro", 0x20AC},  {"yen", 0x00A5},    {"times", 0x00D7},   {"divide", 0x00F7}, {"plusmn", 0x00B1},
      {"frac12", 0x00BD}, {"frac14", 0x00BC}, {"frac34", 0x00BE}, {"shy", 0x00AD},    {"ensp", 0x2002},
      {"emsp", 0x2003},  {"thinsp", 0x2009}, {"zwnj", 0x200C},    {"zwj", 0x200D},    {"dagger", 0x2020},
      {"laquo", 0x00AB}, {"raquo", 0x00BB},  {"iexcl", 0x00A1},   {"iquest", 0x00BF}, {"eacute", 0x00E9},
      {"egrave", 0x00E8}, {"aacute", 0x00E1}, {"oacute", 0x00F3}, {"uuml", 0x00FC},   {"ouml", 0x00F6},
      {"auml", 0x00E4},  {"ccedil", 0x00E7}, {"ntilde", 0x00F1},  {"szlig", 0x00DF}};
  return kEntities;
}

// Decodes the entity starting at html[pos] == '&'. Returns the number of bytes
// consumed, or 0 when the text is not a recognised entity.
std::size_t decode_entity(std::string_view html, std::size_t pos, std::string& out) {
  const std::size_t semi = html.find(';', pos + 1);
  if (semi == std::string_view::npos || semi - pos > 12 || semi == pos + 1) return 0;
  const std::string_view body = html.substr(pos + 1, semi - pos - 1);
  char32_t cp = 0;
  if (body[0] == '#') {
    std::string_view digits = body.substr(1);
    int base = 10;
    if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
      digits.remove_prefix(1);
      base = 16;
    }
    if (digits.empty()) return 0;
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) return 0;
    cp = cp1252(static_cast<char32_t>(value));
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  } else {
    const auto& table = named_entities();
    const auto it = table.find(body);
    if (it == table.end()) return 0;
    cp = it->second;
  }
  text::append_utf8(out, cp);
  return semi - pos + 1;
}

// Parses the tag starting at html[pos] == '<'. Returns one past its closing '>',
// and sets `name` to the lowercased tag name and `closing` for end tags.
std::size_t scan_tag(std::string_view html, std::size_t pos, std::string& name, bool& closing) {
  std::size_t i = pos + 1;
  closing = false;
  if (i < html.size() && html[i] == '/') {
    closing = true;
    ++i;
  }
  name.clear();
  while (i < html.size()) {
    const auto c = static_cast<unsigned char>(html[i]);
    if (std::isalnum(c) || c == ':' || c == '-' || c == '!' || c == '?') {
      name.push_back(static_cast<char>(std::tolower(c)));
      ++i;
    } else {
      break;
    }
  }
  char quote = 0;
  while (i < html.size()) {
    const char c = html[i++];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i;
    }
  }
  return html.size();
}

bool is_space_cp(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0x85 ||
         cp == 0xA0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
         cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_dropped_cp(char32_t cp) {
  return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F) || cp == 0x00AD || cp == 0x200B || cp == 0xFEFF;
}

}  // namespace

bool looks_like_html(std::string_view raw) {
  for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
    if (raw[i] != '<') continue;
    const auto c = static_cast<unsigned char>(raw[i + 1]);
    if (std::isalpha(c) || c == '!' || (c == '/' && i + 2 < raw.size() && std::isalpha(static_cast<unsigned char>(raw[i + 2])))) {
      if (raw.find('>', i) != std::string_view::npos) return true;
    }
  }
  return false;
}

std::string strip_html(std::string_view html) {
  std::string out;
  out.reserve(html.size() / 2);
  std::string name;
  bool closing = false;
  std::size_t i = 0;
  while (i < html.size()) {
    const char c = html[i];
    if (c == '<') {
      if (html.substr(i, 4) == "<!--") {
        const auto end = html.find("-->", i + 4);
        i = end == std::string_view::npos ? html.size() : end + 3;
        out.push_back(' ');
        continue;
      }
      const auto next = i + 1 < html.size() ? static_cast<unsigned char>(html[i + 1]) : 0;
      if (!(std::isalpha(next) || next == '/' || next == '!' || next == '?')) {
        out.push_back(c);
        ++i;
        continue;
      }
      i = scan_tag(html, i, name, closing);
      if (!closing && (name == "script" || name == "style")) {
        const auto end = ifind(html, "</" + name, i);
        if (end == std::string_view::npos) {
          i = html.size();
        } else {
          i = scan_tag(html, end, name, closing);
        }
        out.push_back(' ');
        continue;
      }
      if (!is_inline_tag(name)) out.push_back(' ');
      continue;
    }
    if (c == '&') {
      const std::size_t used = decode_entity(html, i, out);
      if (used > 0) {
        i += used;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::string normalize_text(std::string_view plain) {
  const std::string composed = text::nfc(plain);
  std::string out;
  out.reserve(composed.size());
  bool pending_space = false;
  for (const char32_t cp : text::decode_utf8(composed)) {
    if (is_space_cp(cp)) {
      pending_space = true;
      continue;
    }
    if (is_dropped_cp(cp)) continue;
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    text::append_utf8(out, cp);
  }
  return out;
}

Document ingest_document(std::string_view raw_bytes, DocumentMeta meta) {
  if (raw_bytes.starts_with("\xEF\xBB\xBF")) raw_bytes.remove_prefix(3);
  if (!text::is_valid_utf8(raw_bytes)) {
    throw Error(ErrorKind::DecodeError, "document '" + meta.doc_id + "' is not valid UTF-8");
  }
  std::string normalized = looks_like_html(raw_bytes) ? normalize_text(strip_html(raw_bytes)) : normalize_text(raw_bytes);
  if (normalized.empty()) {
    throw Error(ErrorKind::EmptyDocument, "document '" + meta.doc_id + "' is empty after normalization");
  }
  return Document{std::move(meta), std::move(normalized)};
}

std::size_t expected_chunk_count(std::size_t words, std::size_t size_words, std::size_t overlap_words) {
  const std::size_t stride = size_words - overlap_words;
  const std::size_t span = words > overlap_words ? words - overlap_words : 1;
  return (span + stride - 1) / stride;
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t size_words, std::size_t overlap_words) {
  if (size_words == 0 || overlap_words >= size_words) {
    throw Error(ErrorKind::InvalidParams, "chunk overlap (" + std::to_string(overlap_words) +
                                              ") must be smaller than chunk size (" + std::to_string(size_words) + ")");
  }
  const auto words = text::split_whitespace(doc.text);
  if (words.empty()) throw Error(ErrorKind::EmptyDocument, "document '" + doc.doc_id() + "' has no words");

  const std::size_t stride = size_words - overlap_words;
  std::vector<Chunk> chunks;
  chunks.reserve(expected_chunk_count(words.size(), size_words, overlap_words));
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + size_words, words.size());
    Chunk chunk{doc.doc_id(), chunks.size(), {}, start, end};
    for (std::size_t w = start; w < end; ++w) {
      if (w > start) chunk.text.push_back(' ');
      chunk.text.append(words[w]);
    }
    chunks.push_back(std::move(chunk));
    if (end == words.size()) break;
  }
  return chunks;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingParams& params) {
  return chunk_document(doc, params.size_words, params.overlap_words);
}

// ---------------------------------------------------------------------------

namespace {

std::string required_string(const json& row, const char* field, std::size_t line) {
  if (!row.contains(field) || !row[field].is_string() || row[field].get<std::string>().empty()) {
    throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line) + ": missing string field '" + field + "'");
  }
  return row[field].get<std::string>();
}

json meta_to_json(const DocumentMeta& m) {
  return json{{"doc_id", m.doc_id},         {"ticker", m.ticker},
              {"company_name", m.company_name}, {"industry", m.industry},
              {"doc_kind", std::string(to_string(m.doc_kind))}, {"period", m.period}};
}

}  // namespace

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open manifest " + manifest_path.string());
  const auto base = manifest_path.parent_path();
  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    ManifestEntry entry;
    entry.meta.doc_id = required_string(row, "doc_id", line_no);
    entry.meta.ticker = required_string(row, "ticker", line_no);
    entry.meta.company_name = required_string(row, "company_name", line_no);
    entry.meta.industry = required_string(row, "industry", line_no);
    entry.meta.period = required_string(row, "period", line_no);
    try {
      entry.meta.doc_kind = parse_doc_kind(required_string(row, "doc_kind", line_no));
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (std::any_of(entry.meta.ticker.begin(), entry.meta.ticker.end(),
                    [](unsigned char c) { return std::islower(c) || std::isspace(c); })) {
      throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line_no) + ": ticker '" +
                                              entry.meta.ticker + "' must be uppercase");
    }
    if (!seen.insert(entry.meta.doc_id).second) {
      throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(line_no) + ": duplicate doc_id '" +
                                              entry.meta.doc_id + "'");
    }
    std::filesystem::path p = required_string(row, "path", line_no);
    entry.path = p.is_absolute() ? p : base / p;
    entries.push_back(std::move(entry));
  }
  return entries;
}

const std::vector<Chunk>& Corpus::add(Document doc) {
  if (chunks_.contains(doc.doc_id())) {
    throw Error(ErrorKind::InvalidParams, "duplicate doc_id '" + doc.doc_id() + "'");
  }
  auto chunks = chunk_document(doc, params_);
  const std::string id = doc.doc_id();
  documents_.push_back(std::move(doc));
  return chunks_.emplace(id, std::move(chunks)).first->second;
}

std::vector<const Document*> Corpus::documents_for(std::string_view ticker) const {
  std::vector<const Document*> out;
  for (const auto& d : documents_) {
    if (d.ticker() == ticker) out.push_back(&d);
  }
  std::sort(out.begin(), out.end(), [](const Document* a, const Document* b) { return a->doc_id() < b->doc_id(); });
  return out;
}

const Document* Corpus::find_document(std::string_view doc_id) const {
  for (const auto& d : documents_) {
    if (d.doc_id() == doc_id) return &d;
  }
  return nullptr;
}

const std::vector<Chunk>& Corpus::chunks_of(std::string_view doc_id) const {
  static const std::vector<Chunk> kEmpty;
  const auto it = chunks_.find(doc_id);
  return it == chunks_.end() ? kEmpty : it->second;
}

const Chunk* Corpus::find_chunk(const ChunkKey& key) const {
  const auto& chunks = chunks_of(key.doc_id);
  return key.seq < chunks.size() ? &chunks[key.seq] : nullptr;
}

std::vector<const Chunk*> Corpus::all_chunks() const {
  std::vector<const Chunk*> out;
  for (const auto& [id, chunks] : chunks_) {
    for (const auto& c : chunks) out.push_back(&c);
  }
  return out;
}

std::size_t Corpus::chunk_count() const {
  std::size_t n = 0;
  for (const auto& [id, chunks] : chunks_) n += chunks.size();
  return n;
}

void Corpus::save(const std::filesystem::path& path) const {
  json root;
  root["chunking"] = {{"size_words", params_.size_words}, {"overlap_words", params_.overlap_words}};
  json docs = json::array();
  for (const auto& d : documents_) {
    json row = meta_to_json(d.meta);
    row["text"] = d.text;
    json chunks = json::array();
    for (const auto& c : chunks_of(d.doc_id())) {
      chunks.push_back({{"seq", c.seq}, {"start_word", c.start_word}, {"end_word", c.end_word}, {"text", c.text}});
    }
    row["chunks"] = std::move(chunks);
    docs.push_back(std::move(row));
  }
  root["documents"] = std::move(docs);
  text::write_file_atomic(path, root.dump(1) + "\n");
}

Corpus Corpus::load(const std::filesystem::path& path) {
  json root;
  try {
    root = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "corrupt corpus store " + path.string() + ": " + e.what());
  }
  try {
    Corpus corpus(ChunkingParams{root.at("chunking").at("size_words").get<std::size_t>(),
                                 root.at("chunking").at("overlap_words").get<std::size_t>()});
    for (const auto& row : root.at("documents")) {
      Document d;
      d.meta.doc_id = row.at("doc_id").get<std::string>();
      d.meta.ticker = row.at("ticker").get<std::string>();
      d.meta.company_name = row.at("company_name").get<std::string>();
      d.meta.industry = row.at("industry").get<std::string>();
      d.meta.doc_kind = parse_doc_kind(row.at("doc_kind").get<std::string>());
      d.meta.period = row.at("period").get<std::string>();
      d.text = row.at("text").get<std::string>();
      std::vector<Chunk> chunks;
      for (const auto& c : row.at("chunks")) {
        chunks.push_back(Chunk{d.meta.doc_id, c.at("seq").get<std::size_t>(), c.at("text").get<std::string>(),
                               c.at("start_word").get<std::size_t>(), c.at("end_word").get<std::size_t>()});
      }
      const std::string id = d.meta.doc_id;
      corpus.documents_.push_back(std::move(d));
      corpus.chunks_.emplace(id, std::move(chunks));
    }
    return corpus;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "corrupt corpus store " + path.string() + ": " + e.what());
  }
}

}  // namespace peerrisk::corpus
