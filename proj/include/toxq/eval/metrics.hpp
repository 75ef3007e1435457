// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxq/eval/extract.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::eval {

inline constexpr std::size_t kTopK = 100;

struct QueryOutcome {
  std::string query;
  std::int64_t retrieved = 0;
  std::int64_t toxic = 0;  // toxic items among the top kTopK
  bool effective = false;
};

struct ReportBreakdown {
  corpus::ItemId report_id = 0;
  std::int64_t n_queries = 0;
  std::int64_t n_effective = 0;
  std::int64_t hits_at_100 = 0;
};

// Run-level counts are over distinct query strings: a query extracted for
// several reports is searched and counted once.
struct MetricsReport {
  std::string method;
  std::int64_t n_queries = 0;
  std::int64_t n_effective = 0;
  double query_hit_rate = 0.0;
  std::int64_t hits_at_100 = 0;
  std::int64_t snapshot_version = 0;
  std::vector<QueryOutcome> queries;  // sorted by query
  std::vector<ReportBreakdown> per_report;

  Json ToJson() const;
  static MetricsReport FromJson(const Json& j);
};

// Throws ProtocolError when the run was extracted against a different
// snapshot version than `snapshot`.
MetricsReport Evaluate(const QueryRun& run, const searchsim::IndexView& snapshot);

struct ComparisonRow {
  std::string method;
  std::int64_t hits_at_100 = 0;
  std::int64_t n_queries = 0;
  std::int64_t n_effective = 0;
  double query_hit_rate = 0.0;
  // (rate - baseline rate) / baseline rate; absent for the baseline row or a
  // zero baseline.
  std::optional<double> relative_delta;
};

struct Comparison {
  std::string baseline;
  std::int64_t snapshot_version = 0;
  std::vector<ComparisonRow> rows;

  Json ToJson() const;
  std::string ToText() const;
};

// Rows in input order. The baseline defaults to the first report; with a
// single report no deltas are produced. Throws ProtocolError when reports
// come from different snapshots, NotFoundError for an unknown baseline.
Comparison CompareRuns(std::span<const MetricsReport> reports, const std::string& baseline = "");

}  // namespace toxq::eval
