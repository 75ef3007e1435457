// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Auditor session events and the online-style metrics derived from them.
//
// Payload fields by kind:
//   report_shown        report_id
//   query_suggested     report_id, query_id, query   (actor = origin)
//   query_accepted      query_id                      (actor = human)
//   query_rejected      query_id                      (actor = human)
//   search_executed     query, result_ids, optional report_id / query_id
//   item_labeled_toxic  item_id
//   item_removed        item_id

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toxq/eval/extract.hpp"

namespace toxq::eval {

enum class EventKind {
  kReportShown,
  kQuerySuggested,
  kQueryAccepted,
  kQueryRejected,
  kSearchExecuted,
  kItemLabeledToxic,
  kItemRemoved,
};

enum class Actor { kHuman, kModel };

std::string_view EventKindName(EventKind kind);
EventKind ParseEventKind(std::string_view name);  // ValidationError
std::string_view ActorName(Actor actor);
Actor ParseActor(std::string_view name);  // ValidationError

struct SessionEvent {
  std::int64_t tick = 0;
  EventKind kind = EventKind::kReportShown;
  Json payload = Json::object();
  Actor actor = Actor::kHuman;

  Json ToJson() const;
  static SessionEvent FromJson(const Json& j);
};

// Throws ValidationError on non-increasing ticks or an item_removed event
// without an earlier item_labeled_toxic for the same id.
void CheckLog(const std::vector<SessionEvent>& log);

// A suggested query after attribution.
struct AttributedQuery {
  std::int64_t query_id = 0;
  corpus::ItemId report_id = 0;
  std::string query;
  Actor origin = Actor::kHuman;
  bool accepted = false;
  bool rejected = false;
};

// Suggestions in log order. A model suggestion whose text equals a human
// query for the same report (a human suggestion in the log, or an entry of
// `human_run`) is attributed to the human.
std::vector<AttributedQuery> AttributeQueries(const std::vector<SessionEvent>& log, const QueryRun* human_run);

// Credit for each toxic label: the latest search before the label whose
// results contained the item.
struct LabelCredit {
  corpus::ItemId item_id = 0;
  std::string query;  // empty when no search surfaced the item
  Actor origin = Actor::kHuman;
};
std::vector<LabelCredit> CreditLabels(const std::vector<SessionEvent>& log, const QueryRun* human_run);

struct SessionMetrics {
  std::int64_t model_shown = 0;
  std::int64_t model_accepted = 0;
  std::int64_t human_effective_queries = 0;
  std::int64_t model_effective_queries = 0;
  std::int64_t human_toxic_items = 0;
  std::int64_t model_toxic_items = 0;
  // Absent when undefined: no model suggestion shown, or a zero human
  // baseline.
  std::optional<double> acceptance_rate;
  std::optional<double> toxic_item_detection_increment;
  std::optional<double> hit_query_increment;

  bool defined() const {
    return acceptance_rate.has_value() && toxic_item_detection_increment.has_value() &&
           hit_query_increment.has_value();
  }
  Json ToJson() const;
};

// acceptance = accepted / shown model-attributed suggestions; increments =
// model-attributed contributions over human-attributed ones. A query is
// attributed by its text: the origin of its suggestion for the searched
// report, otherwise human.
SessionMetrics ComputeSessionMetrics(const std::vector<SessionEvent>& log, const QueryRun* human_run);

}  // namespace toxq::eval
