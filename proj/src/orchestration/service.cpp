// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/orchestration/service.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "httplib.h"
#include "toxq/common/errors.hpp"
#include "toxq/datasets/datasets.hpp"
#include "toxq/eval/extract.hpp"
#include "toxq/lm/generate.hpp"

namespace toxq::orchestration {

namespace {

using eval::Actor;
using eval::EventKind;

std::optional<lm::BaseCheckpoint> LoadModel(const ServiceOptions& o) {
  if (o.model.empty()) return std::nullopt;
  return lm::LoadBase(o.model.string());
}

ApiResponse Error(int status, const std::string& kind, const std::string& message) {
  return ApiResponse{status, Json{{"schema", kApiSchema}, {"error", {{"kind", kind}, {"message", message}}}}};
}

Json Ok(Json body) {
  body["schema"] = kApiSchema;
  return body;
}

std::int64_t ParseId(const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw ValidationError("bad id");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("'" + text + "' is not an integer id");
  }
}

Json ParseBody(const std::string& body) {
  if (body.empty()) return Json::object();
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

}  // namespace

ExplorationService::ExplorationService(const ServiceOptions& options)
    : ExplorationService(corpus::ReadCorpus(options.corpus_dir.string()), corpus::ReadReports(options.reports.string()),
                         searchsim::InvertedIndex::Load(options.index.string()), LoadModel(options), options) {}

ExplorationService::ExplorationService(corpus::Corpus corpus, std::vector<corpus::Report> reports,
                                       searchsim::InvertedIndex index, std::optional<lm::BaseCheckpoint> model,
                                       ServiceOptions options)
    : options_(std::move(options)),
      corpus_(std::move(corpus)),
      reports_(std::move(reports)),
      index_(index),
      model_(std::move(model)) {
  for (const auto& r : reports_) corpus_.item(r.item_id);  // NotFoundError on a foreign report
}

const corpus::Report& ExplorationService::report(corpus::ItemId id) const {
  for (const auto& r : reports_) {
    if (r.item_id == id) return r;
  }
  throw NotFoundError("no report " + std::to_string(id));
}

void ExplorationService::Append(EventKind kind, Json payload, Actor actor) {
  eval::SessionEvent e{next_tick_++, kind, std::move(payload), actor};
  if (!options_.event_log.empty()) {
    std::ofstream out(options_.event_log, std::ios::app);
    out << e.ToJson().dump() << '\n';
    out.flush();
    if (!out) throw StateError("cannot append to the event log " + options_.event_log.string());
  }
  log_.push_back(std::move(e));
}

Json ExplorationService::QueryJson(const Query& q) const {
  return Json{{"query_id", q.id},
              {"report_id", q.report_id},
              {"query", q.text},
              {"origin", eval::ActorName(q.origin)},
              {"status", q.status}};
}

ApiResponse ExplorationService::ListReports() const {
  std::lock_guard lock(mu_);
  Json rows = Json::array();
  for (const auto& r : reports_) {
    bool pending = true;
    if (auto it = suggested_.find(r.item_id); it != suggested_.end()) {
      pending = std::any_of(it->second.begin(), it->second.end(),
                            [&](std::int64_t id) { return queries_.at(id).status == "pending"; });
    }
    rows.push_back({{"report_id", r.item_id},
                    {"text", corpus_.item(r.item_id).text},
                    {"tick", r.tick},
                    {"status", pending ? "pending" : "done"}});
  }
  return {200, Ok({{"reports", rows}})};
}

ApiResponse ExplorationService::Suggest(corpus::ItemId report_id) {
  const corpus::Report& r = report(report_id);
  std::lock_guard lock(mu_);
  if (!suggested_.contains(report_id)) {
    const std::string& text = corpus_.item(report_id).text;
    Append(EventKind::kReportShown, {{"report_id", report_id}}, Actor::kHuman);
    std::vector<std::pair<std::string, Actor>> picks;
    std::unordered_set<std::string> seen;
    for (const auto& k : eval::Dedup(r.oracle_keywords)) {
      seen.insert(k);
      picks.emplace_back(k, Actor::kHuman);
    }
    if (model_) {
      lm::GenerationConfig g;
      g.max_new_tokens = options_.max_new_tokens;
      const std::string prompt = datasets::Template(options_.language).Instruction() + text;
      const std::string out = lm::Generate(model_->params, nullptr, model_->tokenizer, prompt, g);
      for (const auto& k : eval::ParseModelOutput(out, options_.language)) {
        // A model query equal to a human one is the human's.
        if (seen.insert(k).second) picks.emplace_back(k, Actor::kModel);
      }
    }
    auto& ids = suggested_[report_id];
    for (const auto& [k, origin] : picks) {
      Query q{next_query_++, report_id, k, origin, "pending"};
      Append(EventKind::kQuerySuggested, {{"report_id", report_id}, {"query_id", q.id}, {"query", k}}, origin);
      ids.push_back(q.id);
      queries_.emplace(q.id, q);
    }
  }
  Json qs = Json::array();
  for (auto id : suggested_.at(report_id)) qs.push_back(QueryJson(queries_.at(id)));
  return {200, Ok({{"report_id", report_id}, {"text", corpus_.item(report_id).text}, {"queries", qs}})};
}

ApiResponse ExplorationService::Search(const Json& request) {
  if (!request.contains("query") || !request.at("query").is_string()) {
    throw ValidationError("search needs a string 'query'");
  }
  const std::string query = request.at("query").get<std::string>();
  std::size_t limit = searchsim::kDefaultLimit;
  if (request.contains("limit")) {
    if (!request.at("limit").is_number_integer() || request.at("limit").get<std::int64_t>() < 1) {
      throw ValidationError("'limit' must be a positive integer");
    }
    limit = request.at("limit").get<std::size_t>();
  }
  std::lock_guard lock(mu_);
  Json payload{{"query", query}};
  for (const char* key : {"report_id", "query_id"}) {
    if (!request.contains(key) || request.at(key).is_null()) continue;
    if (!request.at(key).is_number_integer()) throw ValidationError(std::string("'") + key + "' must be an integer");
    payload[key] = request.at(key);
  }
  if (payload.contains("query_id") && !queries_.contains(payload["query_id"].get<std::int64_t>())) {
    throw NotFoundError("no query " + payload["query_id"].dump());
  }
  const auto view = index_.View();
  const auto result = view.Search(query, limit);
  Json rows = Json::array();
  for (std::size_t i = 0; i < result.ranked_ids.size(); ++i) {
    const auto id = result.ranked_ids[i];
    rows.push_back({{"rank", i + 1}, {"item_id", id}, {"text", view.item(id).text}, {"risk_score", result.scores[i]}});
  }
  payload["result_ids"] = result.ranked_ids;
  payload["snapshot_version"] = result.snapshot_version;
  Append(EventKind::kSearchExecuted, payload, Actor::kHuman);
  return {200, Ok({{"query", query}, {"snapshot_version", result.snapshot_version}, {"results", rows}})};
}

ApiResponse ExplorationService::Decide(std::int64_t query_id, bool accept) {
  std::lock_guard lock(mu_);
  auto it = queries_.find(query_id);
  if (it == queries_.end()) throw NotFoundError("no query " + std::to_string(query_id));
  it->second.status = accept ? "accepted" : "rejected";
  Append(accept ? EventKind::kQueryAccepted : EventKind::kQueryRejected,
         {{"query_id", query_id}, {"report_id", it->second.report_id}, {"query", it->second.text}}, Actor::kHuman);
  return {200, Ok({{"query", QueryJson(it->second)}})};
}

ApiResponse ExplorationService::Label(corpus::ItemId item_id) {
  std::lock_guard lock(mu_);
  const auto view = index_.View();
  if (!view.Contains(item_id)) throw NotFoundError("no item " + std::to_string(item_id));
  if (view.IsRemoved(item_id)) {
    return {200, Ok({{"item_id", item_id},
                     {"removed", true},
                     {"already_removed", true},
                     {"notice", "item was already removed"},
                     {"snapshot_version", view.version()}})};
  }
  Append(EventKind::kItemLabeledToxic, {{"item_id", item_id}}, Actor::kHuman);
  const auto version = index_.Remove(item_id);
  Append(EventKind::kItemRemoved, {{"item_id", item_id}, {"snapshot_version", version}}, Actor::kHuman);
  return {200, Ok({{"item_id", item_id}, {"removed", true}, {"already_removed", false}, {"snapshot_version", version}})};
}

eval::QueryRun ExplorationService::HumanRun() const { return eval::ExtractHuman(reports_, index_.version()); }

ApiResponse ExplorationService::Metrics() const {
  std::lock_guard lock(mu_);
  const eval::QueryRun human = HumanRun();
  const auto m = eval::ComputeSessionMetrics(log_, &human);
  return {200, Ok({{"metrics", m.ToJson()}, {"events", log_.size()}})};
}

ApiResponse ExplorationService::Export(std::optional<double> threshold) const {
  const double t = threshold.value_or(options_.export_threshold);
  if (!(t >= 0 && t < 1)) throw ValidationError("threshold must be in [0, 1)");
  std::lock_guard lock(mu_);
  const auto records = ExportPreferencePairs(
      log_, t, [&](corpus::ItemId id) { return corpus_.item(id).text; }, options_.language);
  Json rows = Json::array();
  for (const auto& r : records) rows.push_back(datasets::ToJson(r));
  return {200, Ok({{"threshold", t}, {"records", rows}})};
}

std::vector<eval::SessionEvent> ExplorationService::Log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::vector<corpus::ItemId> ExplorationService::Tombstones() const { return index_.Tombstones(); }

void ExplorationService::Mount(httplib::Server& server) {
  using httplib::Request;
  using httplib::Response;
  auto wrap = [](std::function<ApiResponse(const Request&)> handler) {
    return [handler = std::move(handler)](const Request& req, Response& res) {
      ApiResponse out;
      try {
        out = handler(req);
      } catch (const NotFoundError& e) {
        out = Error(404, "not_found", e.what());
      } catch (const ValidationError& e) {
        out = Error(400, "validation", e.what());
      } catch (const ConfigError& e) {
        out = Error(400, "validation", e.what());
      } catch (const Json::exception& e) {
        out = Error(400, "validation", e.what());
      } catch (const std::exception& e) {
        out = Error(500, "internal", e.what());
      }
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
  };
  server.Get("/reports", wrap([this](const Request&) { return ListReports(); }));
  server.Post(R"(/reports/(-?\d+)/suggest)", wrap([this](const Request& req) { return Suggest(ParseId(req.matches[1])); }));
  auto search = [this](const Request& req) {
    Json body = req.method == "POST" ? ParseBody(req.body) : Json::object();
    if (req.has_param("q")) body["query"] = req.get_param_value("q");
    for (const char* key : {"report_id", "query_id", "limit"}) {
      if (req.has_param(key)) body[key] = ParseId(req.get_param_value(key));
    }
    return Search(body);
  };
  server.Get("/search", wrap(search));
  server.Post("/search", wrap(search));
  server.Post(R"(/queries/(-?\d+)/accept)", wrap([this](const Request& req) { return Decide(ParseId(req.matches[1]), true); }));
  server.Post(R"(/queries/(-?\d+)/reject)", wrap([this](const Request& req) { return Decide(ParseId(req.matches[1]), false); }));
  server.Post(R"(/items/(-?\d+)/label)", wrap([this](const Request& req) { return Label(ParseId(req.matches[1])); }));
  server.Get("/metrics/session", wrap([this](const Request&) { return Metrics(); }));
  server.Get("/export/preferences", wrap([this](const Request& req) {
    std::optional<double> t;
    if (req.has_param("threshold")) {
      try {
        t = std::stod(req.get_param_value("threshold"));
      } catch (const std::exception&) {
        throw ValidationError("threshold must be a number");
      }
    }
    return Export(t);
  }));
  server.set_error_handler([](const Request&, Response& res) {
    if (!res.body.empty()) return;
    const ApiResponse e = Error(res.status, res.status == 404 ? "not_found" : "validation", "no such endpoint");
    res.set_content(e.body.dump(), "application/json");
  });
}

std::vector<datasets::PreferenceRecord> ExportPreferencePairs(
    const std::vector<eval::SessionEvent>& log, double threshold,
    const std::function<std::string(corpus::ItemId)>& content, datasets::PromptLanguage language) {
  std::unordered_set<corpus::ItemId> labeled;
  for (const auto& e : log) {
    if (e.kind == EventKind::kItemLabeledToxic) labeled.insert(e.payload.at("item_id").get<corpus::ItemId>());
  }
  // Latest search per (report, query text), then per query text.
  std::map<std::pair<corpus::ItemId, std::string>, std::vector<corpus::ItemId>> by_report;
  std::map<std::string, std::vector<corpus::ItemId>> by_text;
  for (const auto& e : log) {
    if (e.kind != EventKind::kSearchExecuted) continue;
    const auto q = e.payload.at("query").get<std::string>();
    auto ids = e.payload.value("result_ids", std::vector<corpus::ItemId>{});
    if (e.payload.contains("report_id")) by_report[{e.payload.at("report_id").get<corpus::ItemId>(), q}] = ids;
    by_text[q] = std::move(ids);
  }
  auto rate = [&](corpus::ItemId report, const std::string& q) {
    const std::vector<corpus::ItemId>* ids = nullptr;
    if (auto it = by_report.find({report, q}); it != by_report.end()) {
      ids = &it->second;
    } else if (auto jt = by_text.find(q); jt != by_text.end()) {
      ids = &jt->second;
    }
    if (ids == nullptr || ids->empty()) return std::pair<double, std::int64_t>{0.0, 0};
    const auto toxic = std::count_if(ids->begin(), ids->end(), [&](corpus::ItemId id) { return labeled.contains(id); });
    return std::pair<double, std::int64_t>{static_cast<double>(toxic) / static_cast<double>(ids->size()),
                                           static_cast<std::int64_t>(ids->size())};
  };

  std::vector<datasets::PreferenceRecord> out;
  std::map<corpus::ItemId, std::vector<eval::AttributedQuery>> per_report;
  for (auto& q : eval::AttributeQueries(log, nullptr)) per_report[q.report_id].push_back(std::move(q));
  for (const auto& [report_id, qs] : per_report) {
    datasets::PreferenceTriple t;
    t.group_id = report_id;
    t.item_ids = {report_id};
    std::set<std::string> used;
    for (const auto& q : qs) {
      if (!used.insert(q.query).second) continue;
      const auto [r, hit] = rate(report_id, q.query);
      const datasets::ScoredKeyword k{q.query, r, hit};
      if (q.accepted && r > threshold) {
        t.preferred.push_back(k);
      } else if (r <= threshold) {
        t.dispreferred.push_back(k);
      }
    }
    if (t.preferred.empty() || t.dispreferred.empty()) continue;
    t.content = content(report_id);
    out.push_back(datasets::RenderPreference(t, language));
  }
  return out;
}

std::vector<corpus::ItemId> ReplayTombstones(const std::vector<eval::SessionEvent>& log) {
  std::set<corpus::ItemId> removed;
  for (const auto& e : log) {
    if (e.kind == EventKind::kItemRemoved) removed.insert(e.payload.at("item_id").get<corpus::ItemId>());
  }
  return {removed.begin(), removed.end()};
}

void Serve(ExplorationService& service, const std::string& host, int port) {
  httplib::Server server;
  service.Mount(server);
  if (!server.listen(host, port)) throw StateError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace toxq::orchestration
