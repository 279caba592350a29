#include "peerrisk/error.hpp"
#include "peerrisk/prompts.hpp"
#include "peerrisk/text_util.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace peerrisk;
using namespace peerrisk::prompts;
using support::kind_of;

namespace {

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

Bindings extraction_bindings() {
  return {{"name", "ACME"}, {"ticker", "ACM"}, {"industry", "Railing"}, {"data", "<chunk text 42>"}};
}

}  // namespace

TEST(RiskQuery, FixedText) {
  const auto q = risk_query();
  EXPECT_EQ(q.rfind("Major Risks of this Company:", 0), 0u);
  EXPECT_NE(q.find("Strategic Supplier Dependence"), std::string::npos);
  EXPECT_NE(q.find("Tariff and Trade Policy Sensitivity"), std::string::npos);
  EXPECT_EQ(q, risk_query());
  EXPECT_EQ(PromptLibrary::builtin().risk_query(), q);
}

TEST(Render, ExtractionSubstitutes) {
  const auto lib = PromptLibrary::builtin();
  const auto out = lib.render(TemplateId::Extraction, extraction_bindings());
  EXPECT_NE(out.rendered.find("Ticker: ACM"), std::string::npos);
  EXPECT_NE(out.rendered.find("Company Info : ACME, Ticker: ACM, Industry: Railing"), std::string::npos);
  EXPECT_NE(out.rendered.find("Data: <chunk text 42>"), std::string::npos);
  EXPECT_NE(out.rendered.find("deep expertise in Railing."), std::string::npos);
  EXPECT_EQ(out.rendered.find('{'), std::string::npos);
  EXPECT_EQ(out.template_id, TemplateId::Extraction);
  EXPECT_EQ(out.bindings, extraction_bindings());
}

TEST(Render, ContrastivePeerSectionNamesEachTickerOnce) {
  const auto lib = PromptLibrary::builtin();
  const auto blocks = build_peer_blocks({"Target Co", "TGT", "target risks"},
                                        {{"Peer One", "PONE", "one"}, {"Peer Two", "PTWO", "two"},
                                         {"Peer Three", "PTHR", "three"}});
  const auto out = lib.render(TemplateId::Contrastive, {{"sub_sector", "Analog"},
                                                         {"target_company_name", "Target Co"},
                                                         {"target_company_ticker", "TGT"},
                                                         {"peer_blocks", blocks}});
  const auto& r = out.rendered;
  const auto section = r.substr(r.find("Here is the risk information:"));
  for (const std::string t : {"(PONE)", "(PTWO)", "(PTHR)"}) EXPECT_EQ(occurrences(section, t), 1u) << t;
  EXPECT_NE(r.find("major risks for Analog companies"), std::string::npos);
  EXPECT_NE(r.find("specific to TGT in contrast"), std::string::npos);
  EXPECT_LT(section.find("Target Co (TGT): target risks"), section.find("Peer One (PONE)"));
  EXPECT_NE(r.find("3–5 important risks"), std::string::npos);
}

TEST(Render, MissingBinding) {
  const auto lib = PromptLibrary::builtin();
  EXPECT_EQ(kind_of([&] {
              lib.render(TemplateId::Aggregation,
                         {{"name", "A"}, {"ticker", "A"}, {"industry", "I"}, {"data", "d"}});
            }),
            ErrorKind::MissingBinding);
}

TEST(Render, ExtraBindingIsUnknownPlaceholder) {
  auto b = extraction_bindings();
  b["question"] = "why";
  EXPECT_EQ(kind_of([&] { PromptLibrary::builtin().render(TemplateId::Extraction, b); }),
            ErrorKind::UnknownPlaceholder);
}

TEST(Render, PureSubstitutionNoRecursion) {
  PromptTemplate t(TemplateId::Extraction, "A {data} B {{literal}} C {data}");
  const auto out = t.render({{"data", "{name} }}{{"}});
  EXPECT_EQ(out.rendered, "A {name} }}{{ B {literal} C {name} }}{{");
  EXPECT_EQ(t.placeholders(), (std::set<std::string, std::less<>>{"data"}));
}

TEST(Render, DeterministicAcrossCalls) {
  const auto lib = PromptLibrary::builtin();
  EXPECT_EQ(lib.render(TemplateId::Extraction, extraction_bindings()).rendered,
            lib.render(TemplateId::Extraction, extraction_bindings()).rendered);
}

TEST(Template, UndeclaredPlaceholderRejected) {
  EXPECT_EQ(kind_of([] { PromptTemplate(TemplateId::Extraction, "hello {nobody}"); }),
            ErrorKind::UnknownPlaceholder);
}

TEST(Template, EveryBuiltinUsesOnlyDeclaredPlaceholders) {
  const std::map<TemplateId, std::set<std::string, std::less<>>> expected = {
      {TemplateId::RiskQuery, {}},
      {TemplateId::Extraction, {"data", "industry", "name", "ticker"}},
      {TemplateId::Aggregation, {"data", "industry", "name", "question", "ticker"}},
      {TemplateId::Contrastive, {"peer_blocks", "sub_sector", "target_company_name", "target_company_ticker"}},
      {TemplateId::BaselineFinal, {"data", "industry", "target_company_name", "target_company_ticker"}},
  };
  const auto lib = PromptLibrary::builtin();
  for (const auto id : kAllTemplates) EXPECT_EQ(lib.get(id).placeholders(), expected.at(id)) << to_string(id);
}

TEST(Template, FinalTemplatesRequestNumberedList) {
  const auto lib = PromptLibrary::builtin();
  for (const auto id : {TemplateId::Contrastive, TemplateId::BaselineFinal}) {
    EXPECT_NE(lib.get(id).body().find("numbered list ranked by importance"), std::string::npos);
  }
  EXPECT_EQ(lib.get(TemplateId::BaselineFinal).body().find("in contrast"), std::string::npos);
}

// prompts/ must stay identical to the compiled-in bodies.
TEST(PromptFiles, RepositoryCopiesMatchBuiltins) {
  const auto from_disk = PromptLibrary::load_dir(PEERRISK_PROMPTS);
  for (const auto id : kAllTemplates) {
    EXPECT_EQ(from_disk.get(id).body(), builtin_body(id)) << to_string(id);
  }
}

TEST(PromptFiles, WriteThenLoadRoundTrip) {
  support::TempDir tmp;
  PromptLibrary::builtin().write_dir(tmp.path());
  const auto back = PromptLibrary::load_dir(tmp.path());
  for (const auto id : kAllTemplates) EXPECT_EQ(back.get(id).body(), builtin_body(id));
  std::filesystem::remove(tmp / "Contrastive.txt");
  EXPECT_EQ(kind_of([&] { PromptLibrary::load_dir(tmp.path()); }), ErrorKind::IoError);
}

TEST(PromptFiles, EditedTemplateIsUsed) {
  support::TempDir tmp;
  PromptLibrary::builtin().write_dir(tmp.path());
  text::write_file_atomic(tmp / "Extraction.txt", "Summarize {data} for {ticker}.\n");
  const auto lib = PromptLibrary::load_dir(tmp.path());
  EXPECT_EQ(lib.render(TemplateId::Extraction, {{"data", "x"}, {"ticker", "T"}}).rendered, "Summarize x for T.");
}

// ---------------------------------------------------------------------------

TEST(PeerBlocks, LayoutWithOnePeer) {
  EXPECT_EQ(build_peer_blocks({"T", "TT", "alpha"}, {{"P1", "PP1", "beta"}}), "T (TT): alpha\n\nP1 (PP1): beta");
}

TEST(PeerBlocks, FourBlocksTargetFirst) {
  const auto s = build_peer_blocks({"T", "TT", "a"}, {{"P1", "PP1", "b"}, {"P2", "PP2", "c"}, {"P3", "PP3", "d"}});
  EXPECT_EQ(occurrences(s, "\n\n"), 3u);
  EXPECT_EQ(s.rfind("T (TT): ", 0), 0u);
  EXPECT_LT(s.find("PP1"), s.find("PP2"));
  EXPECT_LT(s.find("PP2"), s.find("PP3"));
}

TEST(PeerBlocks, Errors) {
  EXPECT_EQ(kind_of([] { build_peer_blocks({"T", "TT", "a"}, {}); }), ErrorKind::NoPeers);
  EXPECT_EQ(kind_of([] { build_peer_blocks({"T", "TT", "a"}, {{"P", "PP", "b"}, {"Again", "TT", "c"}}); }),
            ErrorKind::TargetInPeers);
}
