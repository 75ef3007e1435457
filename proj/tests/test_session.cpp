// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "toxq/common/errors.hpp"
#include "toxq/eval/extract.hpp"
#include "toxq/eval/session.hpp"

using namespace toxq;
using namespace toxq::eval;

namespace {

class Script {
 public:
  Script& Add(EventKind kind, Json payload, Actor actor = Actor::kHuman) {
    log.push_back(SessionEvent{++tick_, kind, std::move(payload), actor});
    return *this;
  }
  Script& Suggest(std::int64_t report, std::int64_t id, const std::string& q, Actor actor) {
    return Add(EventKind::kQuerySuggested, {{"report_id", report}, {"query_id", id}, {"query", q}}, actor);
  }
  Script& Decide(std::int64_t id, bool accept) {
    return Add(accept ? EventKind::kQueryAccepted : EventKind::kQueryRejected, {{"query_id", id}});
  }
  Script& Search(const std::string& q, std::int64_t report, std::vector<std::int64_t> ids) {
    return Add(EventKind::kSearchExecuted, {{"query", q}, {"report_id", report}, {"result_ids", ids}});
  }
  Script& Label(std::int64_t item) { return Add(EventKind::kItemLabeledToxic, {{"item_id", item}}); }
  Script& Removed(std::int64_t item) { return Add(EventKind::kItemRemoved, {{"item_id", item}}); }

  std::vector<SessionEvent> log;

 private:
  std::int64_t tick_ = 0;
};

Script Scripted() {
  Script s;
  s.Add(EventKind::kReportShown, {{"report_id", 10}})
      .Suggest(10, 1, "甲", Actor::kHuman)
      .Suggest(10, 2, "乙", Actor::kModel)
      .Suggest(10, 3, "丙", Actor::kModel)
      .Suggest(10, 4, "甲", Actor::kModel)
      .Decide(2, true)
      .Decide(3, false)
      .Decide(4, true)
      .Search("甲", 10, {1, 2})
      .Search("乙", 10, {2, 3, 4})
      .Label(1)
      .Label(3)
      .Label(4)
      .Label(2)
      .Removed(2)
      .Label(9);
  return s;
}

}  // namespace

TEST_CASE("scripted session metrics, computed by hand") {
  const auto s = Scripted();
  CheckLog(s.log);
  const auto m = ComputeSessionMetrics(s.log, nullptr);
  // Suggestion 4 repeats the human query and counts as human.
  CHECK(m.model_shown == 2);
  CHECK(m.model_accepted == 1);
  CHECK(*m.acceptance_rate == 0.5);
  // Items 2, 3, 4 were last surfaced by the model query; 1 by the human one;
  // 9 by no search.
  CHECK(m.model_toxic_items == 3);
  CHECK(m.human_toxic_items == 2);
  CHECK(*m.toxic_item_detection_increment == 1.5);
  CHECK(m.model_effective_queries == 1);
  CHECK(m.human_effective_queries == 1);
  CHECK(*m.hit_query_increment == 1.0);
  CHECK(m.defined());

  const auto credits = CreditLabels(s.log, nullptr);
  REQUIRE(credits.size() == 5);
  CHECK(credits[0].query == "甲");
  CHECK(credits[3].query == "乙");
  CHECK(credits[4].query.empty());

  const auto q = AttributeQueries(s.log, nullptr);
  REQUIRE(q.size() == 4);
  CHECK(q[3].origin == Actor::kHuman);
  CHECK(q[2].rejected);
  CHECK(!q[2].accepted);
}

TEST_CASE("accepting every model suggestion gives rate 1") {
  Script s;
  s.Suggest(1, 1, "a", Actor::kModel).Suggest(1, 2, "b", Actor::kModel).Decide(1, true).Decide(2, true);
  CHECK(*ComputeSessionMetrics(s.log, nullptr).acceptance_rate == 1.0);
}

TEST_CASE("later decision overrides an earlier one") {
  Script s;
  s.Suggest(1, 1, "a", Actor::kModel).Decide(1, true).Decide(1, false);
  const auto m = ComputeSessionMetrics(s.log, nullptr);
  CHECK(*m.acceptance_rate == 0.0);
}

TEST_CASE("the human run also claims overlapping model queries") {
  Script s;
  s.Suggest(10, 1, "丙", Actor::kModel).Search("丙", 10, {5}).Label(5);
  QueryRun human{"human", {{10, {"丙"}, {}}}, 0};
  CHECK(AttributeQueries(s.log, &human)[0].origin == Actor::kHuman);
  const auto with = ComputeSessionMetrics(s.log, &human);
  CHECK(with.model_shown == 0);
  CHECK(!with.acceptance_rate);
  CHECK(with.human_toxic_items == 1);
  const auto without = ComputeSessionMetrics(s.log, nullptr);
  CHECK(without.model_toxic_items == 1);
  CHECK(!without.toxic_item_detection_increment);
  CHECK(!without.defined());
  // Overlap is judged per report.
  QueryRun other{"human", {{11, {"丙"}, {}}}, 0};
  CHECK(AttributeQueries(s.log, &other)[0].origin == Actor::kModel);
}

TEST_CASE("log validation") {
  Script s;
  s.Label(1).Removed(1);
  CHECK_NOTHROW(CheckLog(s.log));
  auto bad = s.log;
  bad[1].tick = bad[0].tick;
  CHECK_THROWS_AS(CheckLog(bad), ValidationError);
  Script early;
  early.Removed(1);
  CHECK_THROWS_AS(CheckLog(early.log), ValidationError);
  Script orphan;
  orphan.Decide(7, true);
  CHECK_THROWS_AS(AttributeQueries(orphan.log, nullptr), ValidationError);
  CHECK_THROWS_AS(ParseEventKind("query_liked"), ValidationError);
  CHECK_THROWS_AS(ParseActor("robot"), ValidationError);
}

TEST_CASE("events round-trip through JSON") {
  for (const auto& e : Scripted().log) {
    const auto back = SessionEvent::FromJson(e.ToJson());
    CHECK(back.ToJson() == e.ToJson());
    CHECK(ParseEventKind(EventKindName(e.kind)) == e.kind);
  }
  CHECK_THROWS_AS(SessionEvent::FromJson(Json{{"tick", 1}}), ValidationError);
  const auto j = ComputeSessionMetrics(Scripted().log, nullptr).ToJson();
  CHECK(j["acceptance_rate"] == 0.5);
  CHECK(j["defined"] == true);
}
