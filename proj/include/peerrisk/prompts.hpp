#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace peerrisk::prompts {

enum class TemplateId { RiskQuery, Extraction, Aggregation, Contrastive, BaselineFinal };

inline constexpr std::array<TemplateId, 5> kAllTemplates = {TemplateId::RiskQuery, TemplateId::Extraction,
                                                            TemplateId::Aggregation, TemplateId::Contrastive,
                                                            TemplateId::BaselineFinal};

/// Also the file stem used in a prompts directory.
std::string_view to_string(TemplateId id);

/// Placeholder names a template body may use.
const std::set<std::string, std::less<>>& declared_placeholders();

using Bindings = std::map<std::string, std::string, std::less<>>;

struct PromptInstance {
  TemplateId template_id;
  Bindings bindings;
  std::string rendered;
};

/// Body text with single-brace named placeholders. "{{" and "}}" are literal braces.
class PromptTemplate {
 public:
  /// Throws UnknownPlaceholder if the body names a placeholder outside the declared set.
  PromptTemplate(TemplateId id, std::string body);

  TemplateId id() const { return id_; }
  const std::string& body() const { return body_; }
  const std::set<std::string, std::less<>>& placeholders() const { return placeholders_; }

  /// Pure substitution. Bindings must cover exactly this template's placeholders:
  /// MissingBinding for a gap, UnknownPlaceholder for an extra key.
  PromptInstance render(const Bindings& bindings) const;

 private:
  struct Segment {
    bool is_placeholder;
    std::string text;  // literal text, or placeholder name
  };

  TemplateId id_;
  std::string body_;
  std::vector<Segment> segments_;
  std::set<std::string, std::less<>> placeholders_;
};

class PromptLibrary {
 public:
  /// Templates compiled into the library.
  static PromptLibrary builtin();
  /// Reads "<TemplateId>.txt" for every template; IoError if one is missing.
  static PromptLibrary load_dir(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;
  PromptInstance render(TemplateId id, const Bindings& bindings) const { return get(id).render(bindings); }
  /// The retrieval query text, also bound as {question} for aggregation.
  const std::string& risk_query() const { return get(TemplateId::RiskQuery).body(); }

  /// Writes every template as "<TemplateId>.txt".
  void write_dir(const std::filesystem::path& dir) const;

 private:
  std::vector<PromptTemplate> templates_;
};

std::string_view builtin_body(TemplateId id);

/// The fixed risk query (built-in text).
std::string risk_query();

struct CompanyRisk {
  std::string name;
  std::string ticker;
  std::string risk_text;
};

/// Target block first, then each peer in input order, as "Name (TICKER): text",
/// separated by blank lines. Throws NoPeers or TargetInPeers.
std::string build_peer_blocks(const CompanyRisk& target, const std::vector<CompanyRisk>& peers);

}  // namespace peerrisk::prompts
