#include "peerrisk/prompts.hpp"

#include "peerrisk/error.hpp"
#include "peerrisk/text_util.hpp"

#include <algorithm>

namespace peerrisk::prompts {

namespace {

constexpr std::string_view kRiskDescription =
    "Risks are factors related to a company that the performance of the company can be most reliant on; factors "
    "that can determine the performance eg: Strategic Supplier Dependence, Tariff and Trade Policy Sensitivity, "
    "Customer & Revenue Concentration, Geographical Concentration, Geopolitical/Regional Exposure, Energy Transition "
    "& Technology Investment, Supply Chain Fragility, Cybersecurity and Digital Risk, Capital Allocation / Financial "
    "Structuring, Regulatory/Legal Complexity, Human Capital & Succession, Macroeconomics/currency correlation, "
    "number of the suppliers, regions of activities, Any specific customer, Any specific products, informative "
    "actions and events that can cause change in the stock price or future of the company.";

constexpr std::string_view kRankedListFormat =
    "Format the answer as a numbered list ranked by importance, one risk per item, each item written as "
    "\"N. Title — rationale\".";

std::string join(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (const auto p : parts) out.append(p);
  return out;
}

const std::string& body_for(TemplateId id) {
  static const std::string kRiskQuery = join({"Major Risks of this Company:\n\n", kRiskDescription});

  static const std::string kExtraction = join(
      {"You are an expert-level equity analyst with deep expertise in {industry}. I am a hedge fund portfolio "
       "manager retrieving information for an investment committee meeting. You will be given a section of a "
       "10-K/10-Q file, Earning Call Transcripts, or Analyst Reports, and you should retrieve related information "
       "about a given query.\n\n"
       "Company Info : {name}, Ticker: {ticker}, Industry: {industry}\n\n"
       "Data: {data}\n\n"
       "Task: List the Major Risks of this Company.\n\n"
       "Description of risks: ",
       kRiskDescription,
       "\n\n"
       "Return a list of key phrases as specific intrinsic risks (not general and market risks) and explain why "
       "they can trigger and cause a risk. Or why is it informative?\n\n"
       "Do not generate any information that is not included in the given text. Do not use prior knowledge; only "
       "extract / retrieve and structure relevant information. Avoid any additional descriptions. State the most "
       "relevant knowledge from the text based on the given question. Avoid generic and general answers, and too "
       "broad answers. Be specific about the company and the industry. Report any information that can be useful "
       "from an investment perspective within the given query scope."});

  static const std::string kAggregation =
      "You are an expert-level equity analyst with deep expertise in {industry}. I am a hedge fund portfolio "
      "manager retrieving information for an investment committee meeting. Your inputs include summaries of SEC "
      "filings, analysts' reports, and earnings call transcripts. You need to answer a question or provide "
      "information about the given query based on the given summaries and retrieved information. You should select "
      "and aggregate relevant and trustworthy answers and construct a well-rounded analysis on the given query. The "
      "length of the answer should depend on what was asked.\n\n"
      "Company Info : {name}, Ticker: {ticker}, Industry: {industry}\n\n"
      "Question: {question}\n\n"
      "Analysts answers: {data}\n\n"
      "The given data is retrieved from different sources of information about the given query. Try to select "
      "information from various sources and do not rely only on each of the sources (SEC filings, analysts' "
      "reports, and earnings call transcripts). State the sources as much as possible. Take into account the "
      "industry of the company and see broadly, and do not give generic and general answers. Try to connect the "
      "information together to come up with new observations about the question that can be informative for "
      "investment purposes.";

  static const std::string kContrastive = join(
      {"Here is a list of major risks for {sub_sector} companies. Your task is to generate a risk summary for "
       "{target_company_name} ({target_company_ticker}), using comparative insights from the other companies in the "
       "same industry:\n\n"
       "You are receiving information for all companies simultaneously, so you should identify risks specific to "
       "{target_company_ticker} in contrast to the others. Avoid generic or universally applicable risks; instead, "
       "highlight how such risks manifest uniquely for {target_company_ticker}.\n\n"
       "Here is the risk information:\n\n"
       "{peer_blocks}\n\n"
       "Only give the risks for the company {target_company_name} ({target_company_ticker}). Focus on "
       "company-specific, non-generalized/generic insights. Choose the most 3–5 important risks that drive the "
       "company's performance. Your tone should be technical but smooth, including valid reasons and arguments. "
       "Also include sources of information and numerical backup only if available and necessary.\n\n",
       kRankedListFormat});

  // Same framing and budget as the contrastive prompt, without peer material.
  static const std::string kBaselineFinal = join(
      {"Here is a list of major risks for {target_company_name} ({target_company_ticker}), a company in the "
       "{industry} industry. Your task is to generate a risk summary for {target_company_name} "
       "({target_company_ticker}).\n\n"
       "Here is the risk information:\n\n"
       "{target_company_name} ({target_company_ticker}): {data}\n\n"
       "Only give the risks for the company {target_company_name} ({target_company_ticker}). Focus on "
       "company-specific, non-generalized/generic insights. Choose the most 3–5 important risks that drive the "
       "company's performance. Your tone should be technical but smooth, including valid reasons and arguments. "
       "Also include sources of information and numerical backup only if available and necessary.\n\n",
       kRankedListFormat});

  switch (id) {
    case TemplateId::RiskQuery: return kRiskQuery;
    case TemplateId::Extraction: return kExtraction;
    case TemplateId::Aggregation: return kAggregation;
    case TemplateId::Contrastive: return kContrastive;
    case TemplateId::BaselineFinal: return kBaselineFinal;
  }
  throw Error(ErrorKind::InvalidParams, "unknown template id");
}

bool is_ident_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::RiskQuery: return "RiskQuery";
    case TemplateId::Extraction: return "Extraction";
    case TemplateId::Aggregation: return "Aggregation";
    case TemplateId::Contrastive: return "Contrastive";
    case TemplateId::BaselineFinal: return "BaselineFinal";
  }
  return "?";
}

const std::set<std::string, std::less<>>& declared_placeholders() {
  static const std::set<std::string, std::less<>> kDeclared = {
      "name", "ticker", "industry", "data", "question", "sub_sector", "target_company_name", "target_company_ticker",
      "peer_blocks"};
  return kDeclared;
}

PromptTemplate::PromptTemplate(TemplateId id, std::string body) : id_(id), body_(std::move(body)) {
  std::string literal;
  std::size_t i = 0;
  while (i < body_.size()) {
    const char c = body_[i];
    if ((c == '{' || c == '}') && i + 1 < body_.size() && body_[i + 1] == c) {
      literal.push_back(c);
      i += 2;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      while (j < body_.size() && is_ident_char(body_[j])) ++j;
      if (j > i + 1 && j < body_.size() && body_[j] == '}') {
        std::string name = body_.substr(i + 1, j - i - 1);
        if (!declared_placeholders().contains(name)) {
          throw Error(ErrorKind::UnknownPlaceholder,
                      "template " + std::string(to_string(id_)) + " uses undeclared placeholder {" + name + "}");
        }
        if (!literal.empty()) segments_.push_back({false, std::move(literal)});
        literal.clear();
        placeholders_.insert(name);
        segments_.push_back({true, std::move(name)});
        i = j + 1;
        continue;
      }
    }
    literal.push_back(c);
    ++i;
  }
  if (!literal.empty()) segments_.push_back({false, std::move(literal)});
}

PromptInstance PromptTemplate::render(const Bindings& bindings) const {
  for (const auto& [key, value] : bindings) {
    if (!placeholders_.contains(key)) {
      throw Error(ErrorKind::UnknownPlaceholder,
                  "template " + std::string(to_string(id_)) + " has no placeholder {" + key + "}");
    }
  }
  for (const auto& p : placeholders_) {
    if (!bindings.contains(p)) {
      throw Error(ErrorKind::MissingBinding, "template " + std::string(to_string(id_)) + " needs {" + p + "}");
    }
  }
  std::string out;
  for (const auto& seg : segments_) {
    out.append(seg.is_placeholder ? bindings.find(seg.text)->second : seg.text);
  }
  return PromptInstance{id_, bindings, std::move(out)};
}

std::string_view builtin_body(TemplateId id) { return body_for(id); }

std::string risk_query() { return body_for(TemplateId::RiskQuery); }

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  for (const auto id : kAllTemplates) lib.templates_.emplace_back(id, body_for(id));
  return lib;
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (const auto id : kAllTemplates) {
    const auto path = dir / (std::string(to_string(id)) + ".txt");
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::IoError, "missing prompt template " + path.string());
    std::string body = text::read_file(path);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    lib.templates_.emplace_back(id, std::move(body));
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateId id) const {
  const auto it = std::find_if(templates_.begin(), templates_.end(), [id](const auto& t) { return t.id() == id; });
  if (it == templates_.end()) throw Error(ErrorKind::InvalidParams, "template " + std::string(to_string(id)) + " not loaded");
  return *it;
}

void PromptLibrary::write_dir(const std::filesystem::path& dir) const {
  for (const auto& t : templates_) {
    text::write_file_atomic(dir / (std::string(to_string(t.id())) + ".txt"), t.body() + "\n");
  }
}

std::string build_peer_blocks(const CompanyRisk& target, const std::vector<CompanyRisk>& peers) {
  if (peers.empty()) throw Error(ErrorKind::NoPeers, "no peers supplied for " + target.ticker);
  for (const auto& p : peers) {
    if (p.ticker == target.ticker) throw Error(ErrorKind::TargetInPeers, target.ticker + " appears among its own peers");
  }
  const auto block = [](const CompanyRisk& c) { return c.name + " (" + c.ticker + "): " + c.risk_text; };
  std::string out = block(target);
  for (const auto& p : peers) {
    out.append("\n\n");
    out.append(block(p));
  }
  return out;
}

}  // namespace peerrisk::prompts
