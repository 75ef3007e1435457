// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/eval/session.hpp"

#include <array>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "toxq/common/errors.hpp"

namespace toxq::eval {

namespace {

constexpr std::array<std::string_view, 7> kKindNames{
    "report_shown",   "query_suggested",    "query_accepted", "query_rejected",
    "search_executed", "item_labeled_toxic", "item_removed",
};

std::int64_t Int(const Json& payload, const char* key) {
  if (!payload.contains(key) || !payload.at(key).is_number_integer()) {
    throw ValidationError(std::string("session event: payload lacks integer '") + key + "'");
  }
  return payload.at(key).get<std::int64_t>();
}

std::string Str(const Json& payload, const char* key) {
  if (!payload.contains(key) || !payload.at(key).is_string()) {
    throw ValidationError(std::string("session event: payload lacks string '") + key + "'");
  }
  return payload.at(key).get<std::string>();
}

// (report, query text) -> origin; human wins.
class Origins {
 public:
  Origins(const std::vector<AttributedQuery>& queries, const QueryRun* human_run) {
    for (const auto& q : queries) Add(q.report_id, q.query, q.origin);
    if (human_run != nullptr) {
      for (const auto& r : human_run->reports) {
        for (const auto& q : r.queries) Add(r.report_id, q, Actor::kHuman);
      }
    }
  }

  Actor Of(const std::string& query, std::optional<corpus::ItemId> report) const {
    if (report) {
      auto it = by_report_.find({*report, query});
      return it == by_report_.end() ? Actor::kHuman : it->second;
    }
    auto it = any_report_.find(query);
    return it == any_report_.end() ? Actor::kHuman : it->second;
  }

 private:
  void Add(corpus::ItemId report, const std::string& query, Actor origin) {
    auto [it, fresh] = by_report_.emplace(std::make_pair(report, query), origin);
    if (!fresh && origin == Actor::kHuman) it->second = Actor::kHuman;
    auto [jt, fresh2] = any_report_.emplace(query, origin);
    if (!fresh2 && origin == Actor::kHuman) jt->second = Actor::kHuman;
  }

  std::map<std::pair<corpus::ItemId, std::string>, Actor> by_report_;
  std::map<std::string, Actor> any_report_;
};

}  // namespace

std::string_view EventKindName(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

EventKind ParseEventKind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  throw ValidationError("unknown event kind '" + std::string(name) + "'");
}

std::string_view ActorName(Actor actor) { return actor == Actor::kHuman ? "human" : "model"; }

Actor ParseActor(std::string_view name) {
  if (name == "human") return Actor::kHuman;
  if (name == "model") return Actor::kModel;
  throw ValidationError("unknown actor '" + std::string(name) + "'");
}

Json SessionEvent::ToJson() const {
  return Json{{"tick", tick}, {"kind", EventKindName(kind)}, {"payload", payload}, {"actor", ActorName(actor)}};
}

SessionEvent SessionEvent::FromJson(const Json& j) {
  try {
    SessionEvent e;
    e.tick = j.at("tick").get<std::int64_t>();
    e.kind = ParseEventKind(j.at("kind").get<std::string>());
    e.payload = j.value("payload", Json::object());
    e.actor = ParseActor(j.at("actor").get<std::string>());
    return e;
  } catch (const Json::exception& ex) {
    throw ValidationError(std::string("session event: ") + ex.what());
  }
}

void CheckLog(const std::vector<SessionEvent>& log) {
  std::unordered_set<corpus::ItemId> labeled;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (i > 0 && log[i].tick <= log[i - 1].tick) {
      throw ValidationError("session log: tick " + std::to_string(log[i].tick) + " does not increase");
    }
    if (log[i].kind == EventKind::kItemLabeledToxic) labeled.insert(Int(log[i].payload, "item_id"));
    if (log[i].kind == EventKind::kItemRemoved && !labeled.contains(Int(log[i].payload, "item_id"))) {
      throw ValidationError("session log: item removed before being labeled");
    }
  }
}

std::vector<AttributedQuery> AttributeQueries(const std::vector<SessionEvent>& log, const QueryRun* human_run) {
  std::vector<AttributedQuery> out;
  std::unordered_map<std::int64_t, std::size_t> by_id;
  std::set<std::pair<corpus::ItemId, std::string>> human;
  if (human_run != nullptr) {
    for (const auto& r : human_run->reports) {
      for (const auto& q : r.queries) human.insert({r.report_id, q});
    }
  }
  for (const auto& e : log) {
    if (e.kind == EventKind::kQuerySuggested && e.actor == Actor::kHuman) {
      human.insert({Int(e.payload, "report_id"), Str(e.payload, "query")});
    }
  }
  for (const auto& e : log) {
    switch (e.kind) {
      case EventKind::kQuerySuggested: {
        AttributedQuery q;
        q.query_id = Int(e.payload, "query_id");
        q.report_id = Int(e.payload, "report_id");
        q.query = Str(e.payload, "query");
        q.origin = e.actor;
        if (q.origin == Actor::kModel && human.contains({q.report_id, q.query})) q.origin = Actor::kHuman;
        by_id[q.query_id] = out.size();
        out.push_back(std::move(q));
        break;
      }
      case EventKind::kQueryAccepted:
      case EventKind::kQueryRejected: {
        auto it = by_id.find(Int(e.payload, "query_id"));
        if (it == by_id.end()) throw ValidationError("session log: decision on a query never suggested");
        auto& q = out[it->second];
        // The latest decision stands.
        q.accepted = e.kind == EventKind::kQueryAccepted;
        q.rejected = e.kind == EventKind::kQueryRejected;
        break;
      }
      default:
        break;
    }
  }
  return out;
}

std::vector<LabelCredit> CreditLabels(const std::vector<SessionEvent>& log, const QueryRun* human_run) {
  const Origins origins(AttributeQueries(log, human_run), human_run);
  std::unordered_map<corpus::ItemId, LabelCredit> last_seen;
  std::unordered_set<corpus::ItemId> credited;
  std::vector<LabelCredit> out;
  for (const auto& e : log) {
    if (e.kind == EventKind::kSearchExecuted) {
      const std::string query = Str(e.payload, "query");
      std::optional<corpus::ItemId> report;
      if (e.payload.contains("report_id") && !e.payload.at("report_id").is_null()) report = Int(e.payload, "report_id");
      const Actor origin = origins.Of(query, report);
      for (const auto& id : e.payload.value("result_ids", Json::array())) {
        const auto item = id.get<corpus::ItemId>();
        last_seen[item] = LabelCredit{item, query, origin};
      }
    } else if (e.kind == EventKind::kItemLabeledToxic) {
      const auto item = Int(e.payload, "item_id");
      if (!credited.insert(item).second) continue;
      auto it = last_seen.find(item);
      out.push_back(it == last_seen.end() ? LabelCredit{item, "", Actor::kHuman} : it->second);
    }
  }
  return out;
}

Json SessionMetrics::ToJson() const {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"model_shown", model_shown},
              {"model_accepted", model_accepted},
              {"human_effective_queries", human_effective_queries},
              {"model_effective_queries", model_effective_queries},
              {"human_toxic_items", human_toxic_items},
              {"model_toxic_items", model_toxic_items},
              {"acceptance_rate", opt(acceptance_rate)},
              {"toxic_item_detection_increment", opt(toxic_item_detection_increment)},
              {"hit_query_increment", opt(hit_query_increment)},
              {"defined", defined()}};
}

SessionMetrics ComputeSessionMetrics(const std::vector<SessionEvent>& log, const QueryRun* human_run) {
  SessionMetrics m;
  for (const auto& q : AttributeQueries(log, human_run)) {
    if (q.origin != Actor::kModel) continue;
    ++m.model_shown;
    m.model_accepted += q.accepted ? 1 : 0;
  }
  std::set<std::string> human_queries, model_queries;
  for (const auto& c : CreditLabels(log, human_run)) {
    if (c.query.empty()) {
      ++m.human_toxic_items;
      continue;
    }
    if (c.origin == Actor::kModel) {
      ++m.model_toxic_items;
      model_queries.insert(c.query);
    } else {
      ++m.human_toxic_items;
      human_queries.insert(c.query);
    }
  }
  m.human_effective_queries = static_cast<std::int64_t>(human_queries.size());
  m.model_effective_queries = static_cast<std::int64_t>(model_queries.size());
  if (m.model_shown > 0) m.acceptance_rate = static_cast<double>(m.model_accepted) / static_cast<double>(m.model_shown);
  if (m.human_toxic_items > 0) {
    m.toxic_item_detection_increment =
        static_cast<double>(m.model_toxic_items) / static_cast<double>(m.human_toxic_items);
  }
  if (m.human_effective_queries > 0) {
    m.hit_query_increment =
        static_cast<double>(m.model_effective_queries) / static_cast<double>(m.human_effective_queries);
  }
  return m;
}

}  // namespace toxq::eval
