// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "toxq/common/errors.hpp"

namespace toxq::eval {

namespace {

QueryOutcome Outcome(const std::string& query, const searchsim::IndexView& view) {
  QueryOutcome o{query, 0, 0, false};
  if (searchsim::NormalizeUtf8(query).empty()) return o;
  const auto result = view.Search(query, kTopK);
  if (result.snapshot_version != view.version()) throw ProtocolError("evaluate: search answered from another snapshot");
  o.retrieved = static_cast<std::int64_t>(result.ranked_ids.size());
  for (auto id : result.ranked_ids) o.toxic += view.item(id).is_toxic ? 1 : 0;
  o.effective = o.toxic > 0;
  return o;
}

std::string Fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

}  // namespace

Json MetricsReport::ToJson() const {
  Json qs = Json::array();
  for (const auto& q : queries) {
    qs.push_back({{"query", q.query}, {"retrieved", q.retrieved}, {"toxic", q.toxic}, {"effective", q.effective}});
  }
  Json rs = Json::array();
  for (const auto& r : per_report) {
    rs.push_back({{"report_id", r.report_id},
                  {"n_queries", r.n_queries},
                  {"n_effective", r.n_effective},
                  {"hits_at_100", r.hits_at_100}});
  }
  return Json{{"method", method},
              {"n_queries", n_queries},
              {"n_effective", n_effective},
              {"query_hit_rate", query_hit_rate},
              {"hits_at_100", hits_at_100},
              {"snapshot_version", snapshot_version},
              {"queries", std::move(qs)},
              {"per_report", std::move(rs)}};
}

MetricsReport MetricsReport::FromJson(const Json& j) {
  try {
    MetricsReport m;
    m.method = j.at("method").get<std::string>();
    m.n_queries = j.at("n_queries").get<std::int64_t>();
    m.n_effective = j.at("n_effective").get<std::int64_t>();
    m.query_hit_rate = j.at("query_hit_rate").get<double>();
    m.hits_at_100 = j.at("hits_at_100").get<std::int64_t>();
    m.snapshot_version = j.at("snapshot_version").get<std::int64_t>();
    for (const auto& q : j.value("queries", Json::array())) {
      m.queries.push_back(QueryOutcome{q.at("query").get<std::string>(), q.at("retrieved").get<std::int64_t>(),
                                       q.at("toxic").get<std::int64_t>(), q.at("effective").get<bool>()});
    }
    for (const auto& r : j.value("per_report", Json::array())) {
      m.per_report.push_back(ReportBreakdown{r.at("report_id").get<corpus::ItemId>(),
                                             r.at("n_queries").get<std::int64_t>(),
                                             r.at("n_effective").get<std::int64_t>(),
                                             r.at("hits_at_100").get<std::int64_t>()});
    }
    return m;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("metrics report: ") + e.what());
  }
}

MetricsReport Evaluate(const QueryRun& run, const searchsim::IndexView& snapshot) {
  if (run.snapshot_version != snapshot.version()) {
    throw ProtocolError("evaluate: run '" + run.method + "' was extracted at snapshot " +
                        std::to_string(run.snapshot_version) + " but the index is at " +
                        std::to_string(snapshot.version()));
  }
  std::map<std::string, QueryOutcome> outcomes;
  for (const auto& r : run.reports) {
    for (const auto& q : r.queries) {
      if (!outcomes.contains(q)) outcomes.emplace(q, Outcome(q, snapshot));
    }
  }
  MetricsReport m;
  m.method = run.method;
  m.snapshot_version = snapshot.version();
  for (auto& [q, o] : outcomes) {
    ++m.n_queries;
    m.n_effective += o.effective ? 1 : 0;
    m.hits_at_100 += o.toxic;
    m.queries.push_back(o);
  }
  m.query_hit_rate = m.n_queries == 0 ? 0.0 : static_cast<double>(m.n_effective) / static_cast<double>(m.n_queries);
  for (const auto& r : run.reports) {
    ReportBreakdown b{r.report_id, 0, 0, 0};
    for (const auto& q : Dedup(r.queries)) {
      const auto& o = outcomes.at(q);
      ++b.n_queries;
      b.n_effective += o.effective ? 1 : 0;
      b.hits_at_100 += o.toxic;
    }
    m.per_report.push_back(b);
  }
  std::sort(m.per_report.begin(), m.per_report.end(),
            [](const ReportBreakdown& a, const ReportBreakdown& b) { return a.report_id < b.report_id; });
  return m;
}

Json Comparison::ToJson() const {
  Json rs = Json::array();
  for (const auto& r : rows) {
    Json row{{"method", r.method},
             {"hits_at_100", r.hits_at_100},
             {"n_queries", r.n_queries},
             {"n_effective", r.n_effective},
             {"query_hit_rate", r.query_hit_rate}};
    row["relative_delta"] = r.relative_delta ? Json(*r.relative_delta) : Json(nullptr);
    rs.push_back(std::move(row));
  }
  return Json{{"baseline", baseline}, {"snapshot_version", snapshot_version}, {"rows", std::move(rs)}};
}

std::string Comparison::ToText() const {
  std::vector<std::vector<std::string>> cells{
      {"Method", "Number of hit@100", "Number of Queries", "Number of Effective Queries", "Query Hit Rate",
       "vs " + baseline}};
  for (const auto& r : rows) {
    std::string delta = "-";
    if (r.relative_delta) delta = (*r.relative_delta >= 0 ? "+" : "") + Fixed(100.0 * *r.relative_delta, 1) + "%";
    cells.push_back({r.method, std::to_string(r.hits_at_100), std::to_string(r.n_queries),
                     std::to_string(r.n_effective), Fixed(r.query_hit_rate, 3), delta});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += "  ";
      // Left-align the method column, right-align numbers.
      const std::string pad(width[c] - row[c].size(), ' ');
      out += c == 0 ? row[c] + pad : pad + row[c];
    }
    out += '\n';
  }
  return out;
}

Comparison CompareRuns(std::span<const MetricsReport> reports, const std::string& baseline) {
  Comparison cmp;
  if (reports.empty()) return cmp;
  cmp.snapshot_version = reports.front().snapshot_version;
  const MetricsReport* base = &reports.front();
  if (!baseline.empty()) {
    auto it = std::find_if(reports.begin(), reports.end(), [&](const MetricsReport& m) { return m.method == baseline; });
    if (it == reports.end()) throw NotFoundError("compare: no run named '" + baseline + "'");
    base = &*it;
  }
  cmp.baseline = base->method;
  for (const auto& m : reports) {
    if (m.snapshot_version != cmp.snapshot_version) {
      throw ProtocolError("compare: runs come from snapshots " + std::to_string(cmp.snapshot_version) + " and " +
                          std::to_string(m.snapshot_version));
    }
    ComparisonRow row{m.method, m.hits_at_100, m.n_queries, m.n_effective, m.query_hit_rate, std::nullopt};
    if (reports.size() > 1 && &m != base && base->query_hit_rate > 0) {
      row.relative_delta = (m.query_hit_rate - base->query_hit_rate) / base->query_hit_rate;
    }
    cmp.rows.push_back(std::move(row));
  }
  return cmp;
}

}  // namespace toxq::eval
