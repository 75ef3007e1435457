// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// The exploration service behind the auditor console: report queue, query
// suggestions (oracle-human annotations first, then model output), live
// search, accept/reject, toxic labels that remove items from the live index,
// session metrics and preference-pair export. Every action is appended to the
// session event log.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "toxq/corpus/corpus.hpp"
#include "toxq/datasets/prompt.hpp"
#include "toxq/eval/session.hpp"
#include "toxq/lm/checkpoint.hpp"
#include "toxq/searchsim/index.hpp"

namespace httplib {
class Server;
}

namespace toxq::orchestration {

inline constexpr int kApiSchema = 1;

struct ServiceOptions {
  std::filesystem::path corpus_dir;  // corpus holding the reported items
  std::filesystem::path reports;
  std::filesystem::path index;
  std::filesystem::path model;      // merged checkpoint; empty = no model suggestions
  std::filesystem::path event_log;  // appended as JSON lines; empty = memory only
  datasets::PromptLanguage language = datasets::PromptLanguage::kChinese;
  std::int64_t max_new_tokens = 64;
  double export_threshold = 0.05;
};

struct ApiResponse {
  int status = 200;
  Json body;
};

class ExplorationService {
 public:
  explicit ExplorationService(const ServiceOptions& options);
  ExplorationService(corpus::Corpus corpus, std::vector<corpus::Report> reports, searchsim::InvertedIndex index,
                     std::optional<lm::BaseCheckpoint> model, ServiceOptions options);

  // GET /reports
  ApiResponse ListReports() const;
  // POST /reports/{id}/suggest. Suggestions are made once per report; later
  // calls return the same queries.
  ApiResponse Suggest(corpus::ItemId report_id);
  // /search with {"query", optional "report_id", "query_id", "limit"}.
  ApiResponse Search(const Json& request);
  // POST /queries/{id}/accept and /queries/{id}/reject.
  ApiResponse Decide(std::int64_t query_id, bool accept);
  // POST /items/{id}/label. Labeling an already removed item succeeds
  // without new events and says so.
  ApiResponse Label(corpus::ItemId item_id);
  // GET /metrics/session
  ApiResponse Metrics() const;
  // GET /export/preferences
  ApiResponse Export(std::optional<double> threshold) const;

  std::vector<eval::SessionEvent> Log() const;
  std::vector<corpus::ItemId> Tombstones() const;
  // The reports' oracle annotations as a query run on the live version.
  eval::QueryRun HumanRun() const;

  // Registers every endpoint; errors become {"error": {"kind", "message"}}
  // with 400 (validation) or 404 (not found).
  void Mount(httplib::Server& server);

 private:
  struct Query {
    std::int64_t id = 0;
    corpus::ItemId report_id = 0;
    std::string text;
    eval::Actor origin = eval::Actor::kHuman;
    std::string status = "pending";
  };

  void Append(eval::EventKind kind, Json payload, eval::Actor actor);
  Json QueryJson(const Query& q) const;
  const corpus::Report& report(corpus::ItemId id) const;

  ServiceOptions options_;
  corpus::Corpus corpus_;
  std::vector<corpus::Report> reports_;
  searchsim::InvertedIndex index_;
  std::optional<lm::BaseCheckpoint> model_;

  mutable std::mutex mu_;  // serializes every request touching session state
  std::vector<eval::SessionEvent> log_;
  std::map<std::int64_t, Query> queries_;
  std::map<corpus::ItemId, std::vector<std::int64_t>> suggested_;
  std::int64_t next_tick_ = 1;
  std::int64_t next_query_ = 1;
};

// Per report: accepted queries whose observed toxic rate (labeled items among
// the results of the query's latest search) exceeds `threshold` are
// preferred; every other suggested query with a rate <= threshold is
// dispreferred. Reports with both sides yield one record.
std::vector<datasets::PreferenceRecord> ExportPreferencePairs(
    const std::vector<eval::SessionEvent>& log, double threshold,
    const std::function<std::string(corpus::ItemId)>& content, datasets::PromptLanguage language);

// Items removed during the session, ascending.
std::vector<corpus::ItemId> ReplayTombstones(const std::vector<eval::SessionEvent>& log);

// Blocks serving HTTP on host:port.
void Serve(ExplorationService& service, const std::string& host, int port);

}  // namespace toxq::orchestration
