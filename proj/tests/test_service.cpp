// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"
#include "toxq/common/errors.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/orchestration/service.hpp"

using namespace toxq;
using namespace toxq::orchestration;
using datasets::PromptLanguage;

namespace {

// A checkpoint whose greedy continuation of `prompt` is exactly `output`:
// zero weights, one-hot positions, and a head reading the position off.
lm::BaseCheckpoint ScriptedModel(const lm::Tokenizer& tok, const std::string& prompt, const std::string& output) {
  const auto in = lm::PromptIds(tok, prompt);
  const auto out = lm::LabelIds(tok, output);
  lm::ModelConfig cfg;
  cfg.vocab_size = static_cast<std::int64_t>(tok.size());
  cfg.n_layers = 1;
  cfg.n_heads = 1;
  cfg.context_length = static_cast<std::int64_t>(in.size() + out.size() + 4);
  cfg.d_model = cfg.context_length;
  lm::ModelParams p(cfg);
  const auto d = static_cast<std::size_t>(cfg.d_model);
  for (std::size_t j = 0; j < d; ++j) p.data[p.final_gain() + j] = 1;
  for (std::size_t pos = 0; pos < d; ++pos) p.data[p.position_embedding() + pos * d + pos] = 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t pos = in.size() - 1 + i;
    p.data[p.head().weight + static_cast<std::size_t>(out[i]) * d + pos] = 10;
  }
  return lm::BaseCheckpoint{std::move(p), tok, Json::object()};
}

struct Setup {
  fixtures::History h;
  corpus::ItemId report = 0;
  std::string human_kw;
  std::string model_kw;
  lm::Tokenizer tok;
};

Setup MakeSetup() {
  Setup s{fixtures::MakeHistory(12, 30, 3000, 20), 0, "", "", {}};
  for (const auto& r : s.h.reports) {
    const auto& item = s.h.corpus.item(r.item_id);
    for (const auto& phrase : s.h.corpus.campaign(*item.campaign_id).signature_phrases) {
      const bool human = std::find(r.oracle_keywords.begin(), r.oracle_keywords.end(), phrase) != r.oracle_keywords.end();
      if (human || s.h.index.Search(phrase).ranked_ids.size() < 2) continue;
      s.report = r.item_id;
      s.human_kw = r.oracle_keywords.front();
      s.model_kw = phrase;
      break;
    }
    if (!s.model_kw.empty()) break;
  }
  REQUIRE(!s.model_kw.empty());
  std::vector<std::string> texts;
  for (const auto& it : s.h.corpus.items) texts.push_back(it.text);
  const auto& t = datasets::Template(PromptLanguage::kChinese);
  texts.push_back(t.Instruction() + t.output_prefix + ",");
  s.tok = lm::Tokenizer::Build(texts);
  return s;
}

ExplorationService MakeService(const Setup& s, bool with_model, std::filesystem::path event_log = {}) {
  std::optional<lm::BaseCheckpoint> model;
  const auto& t = datasets::Template(PromptLanguage::kChinese);
  if (with_model) {
    model = ScriptedModel(s.tok, t.Instruction() + s.h.corpus.item(s.report).text,
                          t.output_prefix + s.human_kw + "," + s.model_kw);
  }
  ServiceOptions o;
  o.event_log = std::move(event_log);
  return ExplorationService(s.h.corpus, s.h.reports, s.h.index, std::move(model), o);
}

std::set<corpus::ItemId> Ids(const Json& results) {
  std::set<corpus::ItemId> out;
  for (const auto& r : results) out.insert(r.at("item_id").get<corpus::ItemId>());
  return out;
}

}  // namespace

TEST_CASE("the scripted model writes what it is told") {
  const auto s = MakeSetup();
  const auto& t = datasets::Template(PromptLanguage::kChinese);
  const auto m = ScriptedModel(s.tok, t.Instruction() + "样本", t.output_prefix + "甲乙");
  lm::GenerationConfig g;
  g.max_new_tokens = 64;
  if (s.tok.Lookup(U'甲') != lm::Tokenizer::kPad && s.tok.Lookup(U'乙') != lm::Tokenizer::kPad) {
    CHECK(lm::Generate(m.params, nullptr, m.tokenizer, t.Instruction() + "样本", g) == t.output_prefix + "甲乙");
  }
}

TEST_CASE("suggestions carry their origin and are made once") {
  const auto s = MakeSetup();
  auto svc = MakeService(s, true);
  const auto reports = svc.ListReports().body["reports"];
  CHECK(reports.size() == s.h.reports.size());
  for (const auto& r : reports) CHECK(r["status"] == "pending");

  const auto first = svc.Suggest(s.report).body;
  const auto& qs = first["queries"];
  std::set<std::string> human;
  for (const auto& r : s.h.reports) {
    if (r.item_id == s.report) human.insert(r.oracle_keywords.begin(), r.oracle_keywords.end());
  }
  REQUIRE(qs.size() == human.size() + 1);
  for (const auto& q : qs) {
    const auto text = q["query"].get<std::string>();
    CHECK(q["origin"] == (text == s.model_kw ? "model" : "human"));
    CHECK(q["status"] == "pending");
  }
  CHECK(qs.back()["query"] == s.model_kw);
  const auto n_events = svc.Log().size();
  CHECK(svc.Suggest(s.report).body["queries"] == qs);
  CHECK(svc.Log().size() == n_events);
  CHECK_THROWS_AS(svc.Suggest(-5), NotFoundError);

  auto no_model = MakeService(s, false);
  for (const auto& q : no_model.Suggest(s.report).body["queries"]) CHECK(q["origin"] == "human");
}

TEST_CASE("labeling removes the item from later searches") {
  const auto s = MakeSetup();
  auto svc = MakeService(s, true);
  const auto before = svc.Search(Json{{"query", s.model_kw}}).body;
  const auto ids = Ids(before["results"]);
  REQUIRE(ids.size() >= 2);
  const auto victim = *ids.begin();
  const auto labeled = svc.Label(victim).body;
  CHECK(labeled["already_removed"] == false);
  CHECK(labeled["snapshot_version"] == before["snapshot_version"].get<std::int64_t>() + 1);
  const auto after = svc.Search(Json{{"query", s.model_kw}}).body;
  CHECK(!Ids(after["results"]).contains(victim));
  CHECK(Ids(after["results"]).size() == ids.size() - 1);

  const auto n_events = svc.Log().size();
  const auto again = svc.Label(victim).body;
  CHECK(again["already_removed"] == true);
  CHECK(svc.Log().size() == n_events);
  CHECK_THROWS_AS(svc.Label(99999999), NotFoundError);
}

TEST_CASE("session metrics and tombstones follow the event log") {
  const auto s = MakeSetup();
  const auto log_path = std::filesystem::temp_directory_path() / "toxq_service_events.jsonl";
  std::filesystem::remove(log_path);
  auto svc = MakeService(s, true, log_path);
  const auto initial = svc.Tombstones();
  const auto qs = svc.Suggest(s.report).body["queries"];
  for (const auto& q : qs) {
    const auto id = q["query_id"].get<std::int64_t>();
    svc.Decide(id, q["origin"] == "model");
    const auto res = svc.Search(Json{{"query", q["query"]}, {"report_id", s.report}, {"query_id", id}}).body["results"];
    if (q["origin"] == "model") {
      for (std::size_t i = 0; i < 2 && i < res.size(); ++i) svc.Label(res[i]["item_id"].get<corpus::ItemId>());
    }
  }
  const auto log = svc.Log();
  eval::CheckLog(log);
  const auto human = svc.HumanRun();
  const auto m = svc.Metrics().body["metrics"];
  CHECK(m == eval::ComputeSessionMetrics(log, &human).ToJson());
  CHECK(m["model_shown"] == 1);
  CHECK(m["acceptance_rate"] == 1.0);
  CHECK(m["model_toxic_items"].get<std::int64_t>() >= 1);

  std::set<corpus::ItemId> want(initial.begin(), initial.end());
  for (auto id : ReplayTombstones(log)) want.insert(id);
  const auto now = svc.Tombstones();
  CHECK(std::set<corpus::ItemId>(now.begin(), now.end()) == want);

  std::ifstream in(log_path);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    CHECK(eval::SessionEvent::FromJson(Json::parse(line)).ToJson() == log[lines].ToJson());
    ++lines;
  }
  CHECK(lines == log.size());
  std::filesystem::remove(log_path);
}

TEST_CASE("preference export") {
  const auto s = MakeSetup();
  auto svc = MakeService(s, true);
  CHECK(svc.Export(std::nullopt).body["records"].empty());

  const auto qs = svc.Suggest(s.report).body["queries"];
  for (const auto& q : qs) svc.Decide(q["query_id"].get<std::int64_t>(), true);
  const auto model_q = qs.back();
  const auto res = svc.Search(Json{{"query", s.model_kw}, {"report_id", s.report}, {"query_id", model_q["query_id"]}})
                       .body["results"];
  svc.Label(res[0]["item_id"].get<corpus::ItemId>());
  // Human queries were never searched: rate 0, dispreferred.
  const auto records = svc.Export(0.0).body["records"];
  REQUIRE(records.size() == 1);
  const auto rec = datasets::PreferenceFromJson(records[0]);
  const auto parsed = datasets::ParsePreference(rec, PromptLanguage::kChinese);
  CHECK(parsed.content == s.h.corpus.item(s.report).text);
  CHECK(parsed.preferred == s.model_kw);
  CHECK(parsed.dispreferred.find(s.human_kw) != std::string::npos);
  CHECK_THROWS_AS(svc.Export(1.0), ValidationError);
  // Nothing clears a threshold of 0.99 with one label.
  if (res.size() > 1) CHECK(svc.Export(0.99).body["records"].empty());
}

TEST_CASE("http interface") {
  const auto s = MakeSetup();
  auto svc = MakeService(s, true);
  httplib::Server server;
  svc.Mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto json = [](const httplib::Result& r) { return Json::parse(r->body); };
  auto reports = cli.Get("/reports");
  REQUIRE(reports);
  CHECK(reports->status == 200);
  CHECK(json(reports)["schema"] == kApiSchema);

  auto sug = cli.Post("/reports/" + std::to_string(s.report) + "/suggest");
  REQUIRE(sug);
  CHECK(sug->status == 200);
  const auto qs = json(sug)["queries"];
  CHECK(qs.back()["origin"] == "model");

  auto search = cli.Get("/search", httplib::Params{{"q", s.model_kw}, {"report_id", std::to_string(s.report)}},
                        httplib::Headers{});
  REQUIRE(search);
  CHECK(search->status == 200);
  const auto results = json(search)["results"];
  REQUIRE(!results.empty());
  const auto victim = results[0]["item_id"].get<corpus::ItemId>();
  auto post = cli.Post("/search", Json{{"query", s.model_kw}, {"limit", 1}}.dump(), "application/json");
  REQUIRE(post);
  CHECK(json(post)["results"].size() == 1);

  auto acc = cli.Post("/queries/" + qs.back()["query_id"].dump() + "/accept");
  REQUIRE(acc);
  CHECK(json(acc)["query"]["status"] == "accepted");
  auto lab = cli.Post("/items/" + std::to_string(victim) + "/label");
  REQUIRE(lab);
  CHECK(json(lab)["removed"] == true);
  auto again = cli.Get("/search", httplib::Params{{"q", s.model_kw}}, httplib::Headers{});
  CHECK(!Ids(json(again)["results"]).contains(victim));

  auto metrics = cli.Get("/metrics/session");
  REQUIRE(metrics);
  CHECK(json(metrics)["metrics"]["acceptance_rate"] == 1.0);
  auto exp = cli.Get("/export/preferences?threshold=0.0");
  REQUIRE(exp);
  CHECK(exp->status == 200);

  for (const auto& [path, status] : std::vector<std::pair<std::string, int>>{
           {"/reports/123456789/suggest", 404}, {"/queries/999/accept", 404}, {"/items/99999999/label", 404}}) {
    auto r = cli.Post(path);
    REQUIRE(r);
    CHECK(r->status == status);
    CHECK(json(r)["error"]["kind"] == "not_found");
  }
  auto bad_limit = cli.Get("/search?q=x&limit=0");
  REQUIRE(bad_limit);
  CHECK(bad_limit->status == 400);
  CHECK(json(bad_limit)["error"]["kind"] == "validation");
  auto no_query = cli.Post("/search", "{}", "application/json");
  CHECK(no_query->status == 400);
  auto bad_threshold = cli.Get("/export/preferences?threshold=abc");
  CHECK(bad_threshold->status == 400);
  auto missing = cli.Get("/nowhere");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json(missing)["error"]["kind"] == "not_found");

  server.stop();
  worker.join();
}
