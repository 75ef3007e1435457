// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"
#include "toxq/common/errors.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/datasets/prompt.hpp"
#include "toxq/eval/extract.hpp"
#include "toxq/eval/metrics.hpp"
#include "toxq/lm/model.hpp"
#include "toxq/lm/tokenizer.hpp"

using namespace toxq;
using namespace toxq::eval;
using datasets::PromptLanguage;

namespace {

MetricsReport Row(std::string method, std::int64_t n, std::int64_t eff, std::int64_t version = 0) {
  MetricsReport m;
  m.method = std::move(method);
  m.n_queries = n;
  m.n_effective = eff;
  m.query_hit_rate = n == 0 ? 0.0 : static_cast<double>(eff) / static_cast<double>(n);
  m.snapshot_version = version;
  return m;
}

}  // namespace

TEST_CASE("model output parsing") {
  const auto& en = datasets::Template(PromptLanguage::kEnglish);
  const auto& zh = datasets::Template(PromptLanguage::kChinese);
  CHECK(ParseModelOutput(en.output_prefix, PromptLanguage::kEnglish).empty());
  CHECK(ParseModelOutput("a,b", PromptLanguage::kEnglish).empty());
  CHECK(ParseModelOutput(en.output_prefix + "a,b,a", PromptLanguage::kEnglish) == std::vector<std::string>{"a", "b"});
  CHECK(ParseModelOutput(en.output_prefix + "x,, ,y", PromptLanguage::kEnglish) == std::vector<std::string>{"x", "y"});
  CHECK(ParseModelOutput(zh.output_prefix + "甲乙,丙丁", PromptLanguage::kChinese) ==
        std::vector<std::string>{"甲乙", "丙丁"});
  CHECK(ParseModelOutput(zh.output_prefix + "甲乙", PromptLanguage::kEnglish).empty());
}

TEST_CASE("tf-idf scores match a direct recount") {
  const std::vector<std::string> docs{"abcab", "abxyz", "qqabq", "zzzz"};
  const auto model = TfIdf::Fit(docs);
  CHECK(model.n_documents() == 4);
  // "ab" occurs in three documents, "xy" in one.
  CHECK(model.Idf("ab") == doctest::Approx(std::log(4.0 / 3.0)));
  CHECK(model.Idf("xy") == doctest::Approx(std::log(4.0)));
  CHECK(model.Idf("nope") == 0.0);

  auto ngrams = [](const std::string& s) {
    const auto u = utf8::Decode(s);
    std::map<std::string, int> tf;
    for (std::size_t n = 2; n <= 4; ++n) {
      for (std::size_t i = 0; i + n <= u.size(); ++i) ++tf[utf8::Encode(u.substr(i, n))];
    }
    return tf;
  };
  std::map<std::string, int> df;
  for (const auto& d : docs) {
    for (const auto& [t, c] : ngrams(d)) ++df[t];
  }
  const auto ranked = model.Rank("abcab");
  REQUIRE(ranked.size() == ngrams("abcab").size());
  for (const auto& t : ranked) {
    const double want = ngrams("abcab").at(t.term) * std::log(4.0 / df.at(t.term));
    CHECK(std::abs(t.score - want) < 1e-12);
  }
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    CHECK((ranked[i - 1].score > ranked[i].score ||
           (ranked[i - 1].score == ranked[i].score && ranked[i - 1].term < ranked[i].term)));
  }
}

TEST_CASE("tf-idf: a term in every document scores zero, a unique term scores highest") {
  const std::vector<std::string> docs{"好物好物独家", "好物一般", "好物普通", "好物常见"};
  const auto model = TfIdf::Fit(docs);
  const auto ranked = model.Rank(docs[0]);
  REQUIRE(!ranked.empty());
  CHECK(model.Idf("好物") == 0.0);
  for (const auto& t : ranked) {
    if (t.term == "好物") CHECK(t.score == 0.0);
  }
  CHECK(ranked.front().score == doctest::Approx(std::log(4.0)));
  CHECK(CharNgrams("ab cd", 2, 3).count("b c") == 0);
  CHECK(CharNgrams("ab cd", 2, 3).count("cd") == 1);
}

TEST_CASE("evaluation matches a brute-force recount") {
  auto h = fixtures::MakeHistory(9, 40, 5000, 30);
  const auto view = h.index.View();
  const auto human = ExtractHuman(h.reports, view.version());
  const auto tfidf = ExtractTfIdf(h.corpus, h.reports, 3, view.version());
  const auto tombs = h.index.Tombstones();
  const std::set<corpus::ItemId> removed(tombs.begin(), tombs.end());
  for (const QueryRun* run : {&human, &tfidf}) {
    const auto m = Evaluate(*run, view);
    std::set<std::string> distinct;
    for (const auto& r : run->reports) distinct.insert(r.queries.begin(), r.queries.end());
    CHECK(m.n_queries == static_cast<std::int64_t>(distinct.size()));
    std::int64_t eff = 0, hits = 0;
    for (const auto& q : m.queries) {
      const auto [hit, toxic] = oracle::Recount(h.corpus.items, view.core().scorer, removed, q.query);
      CHECK(q.retrieved == hit);
      CHECK(q.toxic == toxic);
      eff += toxic > 0;
      hits += toxic;
    }
    CHECK(m.n_effective == eff);
    CHECK(m.hits_at_100 == hits);
    CHECK(m.query_hit_rate == doctest::Approx(static_cast<double>(eff) / static_cast<double>(distinct.size())));
    CHECK(m.per_report.size() == run->reports.size());
    CHECK(MetricsReport::FromJson(m.ToJson()).ToJson() == m.ToJson());
  }
  CHECK(Evaluate(human, view).query_hit_rate > Evaluate(tfidf, view).query_hit_rate);
}

TEST_CASE("a shared query counts once at run level") {
  corpus::Corpus c;
  c.items = {fixtures::Doc(0, "坏东西一号", true), fixtures::Doc(1, "坏东西二号", true), fixtures::Doc(2, "好东西", false)};
  c.Reindex();
  const auto index = searchsim::InvertedIndex::Build(c, searchsim::RiskScorer::Fit(c.items));
  QueryRun run{"m", {{0, {"坏东西", "好东西"}, {}}, {1, {"坏东西"}, {}}}, index.version()};
  const auto m = Evaluate(run, index.View());
  CHECK(m.n_queries == 2);
  CHECK(m.n_effective == 1);
  CHECK(m.query_hit_rate == 0.5);
  CHECK(m.per_report[1].n_queries == 1);
  CHECK(m.per_report[1].n_effective == 1);

  QueryRun all{"all", {{0, {"坏东西", "一号"}, {}}}, index.version()};
  CHECK(Evaluate(all, index.View()).query_hit_rate == 1.0);
}

TEST_CASE("snapshot mismatch is refused") {
  auto h = fixtures::MakeHistory(3, 5, 2000, 20);
  auto run = ExtractHuman(h.reports, h.index.version() - 1);
  CHECK_THROWS_AS(Evaluate(run, h.index.View()), ProtocolError);
  const std::vector<MetricsReport> mixed{Row("a", 10, 5, 1), Row("b", 10, 5, 2)};
  CHECK_THROWS_AS(CompareRuns(mixed), ProtocolError);
}

TEST_CASE("comparison table") {
  const MetricsReport human = Row("human", 321, 157);
  CHECK(human.query_hit_rate == doctest::Approx(0.489).epsilon(1e-3));

  SUBCASE("single run has no delta") {
    const auto cmp = CompareRuns(std::vector{human});
    REQUIRE(cmp.rows.size() == 1);
    CHECK(!cmp.rows[0].relative_delta);
  }
  SUBCASE("identical rows differ by zero") {
    const auto cmp = CompareRuns(std::vector{human, human});
    CHECK(*cmp.rows[1].relative_delta == 0.0);
  }
  SUBCASE("relative delta against the chosen baseline") {
    const std::vector runs{Row("tfidf", 100, 10), human, Row("model", 200, 120)};
    const auto cmp = CompareRuns(runs, "human");
    CHECK(cmp.baseline == "human");
    CHECK(!cmp.rows[1].relative_delta);
    CHECK(*cmp.rows[2].relative_delta == doctest::Approx((0.6 - 157.0 / 321) / (157.0 / 321)));
    CHECK(cmp.ToText().find("model") != std::string::npos);
    CHECK_THROWS_AS(CompareRuns(runs, "nobody"), NotFoundError);
  }
  SUBCASE("zero baseline yields no delta") {
    const auto cmp = CompareRuns(std::vector{Row("zero", 10, 0), human});
    CHECK(!cmp.rows[1].relative_delta);
  }
}

TEST_CASE("model extraction is deterministic and well formed") {
  auto h = fixtures::MakeHistory(4, 6, 1000, 10);
  std::vector<std::string> texts;
  for (const auto& it : h.corpus.items) texts.push_back(it.text);
  texts.push_back(datasets::Template(PromptLanguage::kEnglish).Instruction());
  texts.push_back(datasets::Template(PromptLanguage::kEnglish).output_prefix);
  const auto tok = lm::Tokenizer::Build(texts);
  lm::ModelConfig cfg;
  cfg.vocab_size = static_cast<std::int64_t>(tok.size());
  cfg.n_layers = 1;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.context_length = 512;
  const auto params = lm::ModelParams::Init(cfg, 5);
  ModelExtractor ex{&params, &tok, PromptLanguage::kEnglish, {}};
  ex.generation.max_new_tokens = 8;
  const auto a = ExtractModel(ex, h.corpus, h.reports, h.index.version());
  const auto b = ExtractModel(ex, h.corpus, h.reports, h.index.version());
  CHECK(a.ToJson() == b.ToJson());
  REQUIRE(a.reports.size() == h.reports.size());
  for (const auto& r : a.reports) CHECK(r.queries == ParseModelOutput(r.raw, PromptLanguage::kEnglish));
  CHECK(QueryRun::FromJson(a.ToJson()).ToJson() == a.ToJson());
  CHECK_THROWS_AS(ExtractModel(ModelExtractor{}, h.corpus, h.reports, 0), ContractError);
}
