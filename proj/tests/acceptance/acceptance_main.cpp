// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "peerrisk/cli.hpp"
#include "peerrisk/metrics.hpp"
#include "peerrisk/pipeline.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

using namespace peerrisk;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::fixed << v;
  return s.str();
}

bool close(const metrics::Prf& a, const oracle::Prf& b, double tol) {
  return std::abs(a.recall - b.recall) < tol && std::abs(a.precision - b.precision) < tol && std::abs(a.f1 - b.f1) < tol;
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0 && std::isfinite(v); }

int cli_run(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

// ---------------------------------------------------------------------------

Outcome metric_oracle_equivalence() {
  Outcome r;
  const auto t0 = Clock::now();
  std::mt19937 rng(20250101);
  for (int i = 0; i < 200 && r.pass; ++i) {
    const auto c = oracle::random_tokens(rng, 50, 10);
    const auto ref = oracle::random_tokens(rng, 50, 10);
    const metrics::TokenSeq cs{c}, rs{ref};
    for (std::size_t n : {1u, 2u}) {
      r.require(close(metrics::rouge_n(cs, rs, n), oracle::rouge_n(c, ref, n), 1e-9),
                "rouge_" + std::to_string(n) + " differs on pair " + std::to_string(i));
    }
    r.require(close(metrics::rouge_l(cs, rs), oracle::rouge_l(c, ref), 1e-9), "rouge_l differs on pair " + std::to_string(i));
  }
  const double secs = seconds_since(t0);
  r.require(secs < 5.0, "took " + fmt(secs) + "s");
  if (r.pass) r.detail = "200 pairs, " + fmt(secs) + "s";
  return r;
}

Outcome canonical_fixtures() {
  Outcome r;
  const auto bigram = metrics::rouge_n(metrics::tokenize("the cat sat"), metrics::tokenize("the cat ran"), 2);
  r.require(close(bigram, oracle::make_prf(0.5, 0.5), 1e-12), "ROUGE-2 on the cat sat/ran");
  const auto lcs = metrics::rouge_l({{"a", "b", "c", "d", "e"}}, {{"a", "c", "e"}});
  r.require(std::abs(lcs.f1 - 0.75) < 1e-12 && std::abs(lcs.recall - 1.0) < 1e-12 && std::abs(lcs.precision - 0.6) < 1e-12,
            "ROUGE-L on [a..e] vs [a,c,e]");
  metrics::HashedTokenEmbedder e;
  for (const std::string text : {"gallium export controls", "1. Tariff Risk — duties on tools\n2. FX — euro", "x"}) {
    const auto s = metrics::score_text(text, text, e);
    for (const auto* p : {&s.rouge1, &s.rougeL, &s.bert}) {
      r.require(close(*p, oracle::make_prf(1, 1), 1e-9), "identity pair not 1.0: " + text);
    }
    if (metrics::tokenize(text).size() >= 2) r.require(close(s.rouge2, oracle::make_prf(1, 1), 1e-9), "identity ROUGE-2");
  }
  if (r.pass) r.detail = "ROUGE-2 0.5/0.5/0.5, ROUGE-L F1 0.75, identity 1.0";
  return r;
}

Outcome bertscore_properties() {
  Outcome r;
  const auto t0 = Clock::now();
  std::mt19937 rng(77);
  metrics::HashedTokenEmbedder hashed;
  for (int i = 0; i < 100 && r.pass; ++i) {
    const metrics::TokenSeq c{oracle::random_tokens(rng, 40, 30)};
    const metrics::TokenSeq ref{oracle::random_tokens(rng, 40, 30)};
    if (!c.empty()) {
      const auto self = metrics::bert_score(c, c, hashed);
      r.require(std::abs(self.recall - 1) < 1e-9 && std::abs(self.precision - 1) < 1e-9 && std::abs(self.f1 - 1) < 1e-9,
                "self-score not 1 on pair " + std::to_string(i));
    }
    const auto ab = metrics::bert_score(c, ref, hashed);
    const auto ba = metrics::bert_score(ref, c, hashed);
    r.require(std::abs(ab.recall - ba.precision) < 1e-12 && std::abs(ab.precision - ba.recall) < 1e-12 &&
                  std::abs(ab.f1 - ba.f1) < 1e-12,
              "swap symmetry fails on pair " + std::to_string(i));
  }
  metrics::OneHotTokenEmbedder one_hot;
  for (int i = 0; i < 100 && r.pass; ++i) {
    const auto c = oracle::random_tokens(rng, 40, 30);
    const auto ref = oracle::random_tokens(rng, 40, 30);
    const double got = metrics::bert_score({c}, {ref}, one_hot).recall;
    r.require(std::abs(got - oracle::coverage(c, ref)) < 1e-12, "one-hot recall != coverage on pair " + std::to_string(i));
  }
  const double secs = seconds_since(t0);
  r.require(secs < 5.0, "took " + fmt(secs) + "s");
  if (r.pass) r.detail = "self 1.0, swap symmetric, one-hot coverage on 100 pairs, " + fmt(secs) + "s";
  return r;
}

Outcome retrieval_oracle_equivalence() {
  Outcome r;
  std::mt19937 rng(4242);
  index::HashedBagOfWordsEmbedder provider(16);
  index::Embedder embedder(provider, std::make_shared<index::EmbeddingCache>());
  for (int trial = 0; trial < 100 && r.pass; ++trial) {
    index::VectorStore store(provider.model_id(), 16);
    std::vector<std::pair<std::pair<std::string, std::size_t>, std::vector<double>>> rows;
    for (std::size_t i = 0; i < 50; ++i) {
      const corpus::ChunkKey key{"doc" + std::to_string(rng() % 9), i};
      const auto v = embedder.embed(oracle::random_text(rng, 6, 12));
      store.add(key, v);
      rows.push_back({{key.doc_id, key.seq}, v.values});
    }
    const auto query = oracle::random_text(rng, 4, 12);
    const std::size_t k = 1 + rng() % 12;
    const auto got = index::query_top_k(store, embedder, query, k);
    const auto want = oracle::top_k(rows, provider.embed_one(query), k);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].chunk.doc_id == want[i].doc_id && got[i].chunk.seq == want[i].seq &&
             std::abs(got[i].score - want[i].score) < 1e-12;
    }
    r.require(same, "top-" + std::to_string(k) + " differs on trial " + std::to_string(trial));
  }
  if (r.pass) r.detail = "100 trials of 50-chunk stores";
  return r;
}

Outcome pipeline_shape() {
  Outcome r;
  const auto t0 = Clock::now();
  support::OfflineWorld w;
  const auto peer_set =
      pipeline::find_peer_set(pipeline::load_peer_sets(support::fixture("corpus/peer_sets.json")), "NVA");
  pipeline::run_contrastive(peer_set, w.deps());
  const auto ledger = w.gateway.ledger();
  std::size_t expected_extraction = 0;
  for (const auto* t : {"NVA", "QRT", "HLX"}) {
    std::size_t chunks = 0;
    for (const auto* d : w.corpus.documents_for(t)) chunks += w.corpus.chunks_of(d->doc_id()).size();
    expected_extraction += std::min(w.config.k, chunks);
  }
  const auto ex = support::count_stage(ledger, "gpt-4.1-mini");
  const auto agg = support::count_stage(ledger, "gpt-4.1");
  const auto fin = support::count_stage(ledger, "o3");
  r.require(ex == expected_extraction, "extraction calls " + std::to_string(ex) + " != " + std::to_string(expected_extraction));
  r.require(agg == 3, "aggregation calls " + std::to_string(agg));
  r.require(fin == 1 && ledger.size() == ex + agg + fin, "final calls " + std::to_string(fin));
  r.require(w.mock.call_count() == ledger.size(), "mock saw a different call count");

  const auto prompt = ledger.back().request.user;
  const auto info = prompt.find("Here is the risk information:");
  const auto nva = prompt.find("(NVA): ", info);
  const auto qrt = prompt.find("(QRT): ", info);
  const auto hlx = prompt.find("(HLX): ", info);
  r.require(info != std::string::npos && nva != std::string::npos && qrt != std::string::npos && hlx != std::string::npos,
            "final prompt is missing a ticker block");
  r.require(nva < qrt && nva < hlx, "target block is not first");

  // Same path through the CLI: two consecutive runs, byte-identical report JSON.
  support::TempDir tmp;
  const nlohmann::json cfg = {
      {"endpoints", {{"chat_provider", "mock"}, {"embed_provider", "hashed"}}},
      {"paths",
       {{"corpus_manifest", support::fixture("corpus/manifest.jsonl").string()},
        {"peer_sets", support::fixture("corpus/peer_sets.json").string()}}}};
  text::write_file_atomic(tmp / "peerrisk.json", cfg.dump());
  const std::string c = (tmp / "peerrisk.json").string();
  std::string log;
  r.require(cli_run({"--config", c, "ingest"}, &log) == 0, "ingest failed: " + log);
  r.require(cli_run({"--config", c, "index"}, &log) == 0, "index failed: " + log);
  r.require(cli_run({"--config", c, "generate", "--target", "NVA", "--contrastive", "--out", (tmp / "1.json").string()}, &log) == 0,
            "generate failed: " + log);
  r.require(cli_run({"--config", c, "generate", "--target", "NVA", "--contrastive", "--out", (tmp / "2.json").string()}, &log) == 0,
            "second generate failed: " + log);
  if (r.pass) {
    r.require(text::read_file(tmp / "1.json") == text::read_file(tmp / "2.json"), "report JSON differs between runs");
  }
  const double secs = seconds_since(t0);
  r.require(secs < 10.0, "took " + fmt(secs) + "s");
  if (r.pass) {
    r.detail = std::to_string(ex) + " extraction + " + std::to_string(agg) + " aggregation + " + std::to_string(fin) +
               " final, target first, identical JSON, " + fmt(secs) + "s";
  }
  return r;
}

Outcome ledger_isolation() {
  Outcome r;
  support::OfflineWorld w;
  const auto peer_set =
      pipeline::find_peer_set(pipeline::load_peer_sets(support::fixture("corpus/peer_sets.json")), "NVA");
  // Warm the cache, then record each mode's ledger.
  pipeline::run_contrastive(peer_set, w.deps());
  pipeline::run_baseline("NVA", w.deps());
  w.gateway.clear_ledger();
  pipeline::run_contrastive(peer_set, w.deps());
  const auto contrastive = w.gateway.ledger();
  w.gateway.clear_ledger();
  pipeline::run_baseline("NVA", w.deps());
  const auto baseline = w.gateway.ledger();

  // Drop the peers' own retrieval stages; everything else must coincide.
  std::vector<std::string> c_keys, b_keys;
  for (const auto& e : contrastive) {
    const bool peer_stage = e.request.user.find("Ticker: QRT,") != std::string::npos ||
                            e.request.user.find("Ticker: HLX,") != std::string::npos;
    if (!peer_stage) c_keys.push_back(e.key);
  }
  for (const auto& e : baseline) b_keys.push_back(e.key);
  std::sort(c_keys.begin(), c_keys.end());
  std::sort(b_keys.begin(), b_keys.end());
  std::vector<std::string> only_c, only_b;
  std::set_difference(c_keys.begin(), c_keys.end(), b_keys.begin(), b_keys.end(), std::back_inserter(only_c));
  std::set_difference(b_keys.begin(), b_keys.end(), c_keys.begin(), c_keys.end(), std::back_inserter(only_b));
  r.require(only_c.size() == 1 && only_b.size() == 1,
            std::to_string(only_c.size()) + "/" + std::to_string(only_b.size()) + " unmatched requests");
  if (r.pass) {
    r.require(only_c[0] == contrastive.back().key && only_b[0] == baseline.back().key,
              "the differing request is not the final stage");
    r.require(contrastive.back().request.model == baseline.back().request.model, "final models differ");
  }
  r.require(w.gateway.provider_calls() == w.mock.call_count(), "provider call accounting");
  if (r.pass) r.detail = std::to_string(b_keys.size() - 1) + " shared requests, only the final request differs";
  return r;
}

Outcome evaluate_smoke() {
  Outcome r;
  support::TempDir tmp;
  const nlohmann::json cfg = {
      {"endpoints", {{"chat_provider", "mock"}, {"embed_provider", "hashed"}}},
      {"paths",
       {{"corpus_manifest", support::fixture("corpus/manifest.jsonl").string()},
        {"peer_sets", support::fixture("corpus/peer_sets.json").string()}}}};
  text::write_file_atomic(tmp / "peerrisk.json", cfg.dump());
  const std::string c = (tmp / "peerrisk.json").string();
  std::string log;
  r.require(cli_run({"--config", c, "ingest"}, &log) == 0, log);
  r.require(cli_run({"--config", c, "index"}, &log) == 0, log);
  r.require(cli_run({"--config", c, "generate", "--target", "NVA", "--out", (tmp / "nva_c.json").string()}, &log) == 0, log);
  r.require(cli_run({"--config", c, "generate", "--target", "NVA", "--baseline", "--out", (tmp / "nva_b.json").string()}, &log) == 0, log);
  r.require(cli_run({"--config", c, "generate", "--target", "QRT", "--baseline", "--out", (tmp / "qrt_b.json").string()}, &log) == 0, log);
  std::string manifest;
  for (const auto& [report, ticker] : std::vector<std::pair<std::string, std::string>>{
           {"nva_c.json", "NVA"}, {"nva_b.json", "NVA"}, {"qrt_b.json", "QRT"}}) {
    manifest += nlohmann::json{{"ticker", ticker},
                               {"report_path", report},
                               {"reference_path", support::fixture("eval/ref_" + ticker + ".txt").string()}}
                    .dump() +
                "\n";
  }
  text::write_file_atomic(tmp / "eval.jsonl", manifest);
  std::string grid;
  r.require(cli_run({"--config", c, "evaluate", "--manifest", (tmp / "eval.jsonl").string(), "--out",
                     (tmp / "scores.json").string()},
                    &grid) == 0,
            "evaluate failed: " + grid);
  if (!r.pass) return r;

  nlohmann::json scores;
  try {
    scores = nlohmann::json::parse(text::read_file(tmp / "scores.json"));
  } catch (const std::exception& e) {
    r.require(false, std::string("scores.json unreadable: ") + e.what());
    return r;
  }
  r.require(scores.contains("per_company") && scores["per_company"].size() == 3, "per_company rows");
  r.require(scores.contains("groups") && scores["groups"].size() == 2, "expected Baseline and Contrastive groups");
  std::size_t values = 0;
  std::function<void(const nlohmann::json&)> walk = [&](const nlohmann::json& j) {
    if (j.is_object() && j.contains("recall") && j.contains("precision") && j.contains("f1")) {
      for (const char* k : {"recall", "precision", "f1"}) {
        r.require(j[k].is_number() && in_unit(j[k].get<double>()), std::string("metric out of [0,1]: ") + j.dump());
        ++values;
      }
      return;
    }
    if (j.is_structured()) {
      for (const auto& v : j) walk(v);
    }
  };
  walk(scores);
  r.require(values == (3 + 2 + 2) * 4 * 3, "unexpected metric count " + std::to_string(values));
  r.require(grid.find("o3 / Baseline") != std::string::npos && grid.find("o3 / Contrastive") != std::string::npos,
            "grid rows missing");
  if (r.pass) {
    r.detail = std::to_string(values) + " metric values in [0,1]; absolute scores not asserted (the human analyst references are not public; synthetic references used)";
  }
  return r;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracle equivalence", metric_oracle_equivalence},
      {"canonical metric fixtures", canonical_fixtures},
      {"BERTScore properties", bertscore_properties},
      {"retrieval oracle equivalence", retrieval_oracle_equivalence},
      {"pipeline determinism and shape", pipeline_shape},
      {"baseline/contrastive isolation", ledger_isolation},
      {"evaluate smoke test", evaluate_smoke},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " - " << o.detail << "\n";
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
