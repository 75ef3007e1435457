// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/eval/extract.hpp"

#include <unordered_set>

#include "toxq/common/errors.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::eval {

Json QueryRun::ToJson() const {
  Json rows = Json::array();
  for (const auto& r : reports) {
    Json row{{"report_id", r.report_id}, {"queries", r.queries}};
    if (!r.raw.empty()) row["raw"] = r.raw;
    rows.push_back(std::move(row));
  }
  return Json{{"method", method}, {"snapshot_version", snapshot_version}, {"reports", std::move(rows)}};
}

QueryRun QueryRun::FromJson(const Json& j) {
  try {
    QueryRun run;
    run.method = j.at("method").get<std::string>();
    run.snapshot_version = j.at("snapshot_version").get<std::int64_t>();
    for (const auto& row : j.at("reports")) {
      ReportQueries r;
      r.report_id = row.at("report_id").get<corpus::ItemId>();
      r.queries = row.at("queries").get<std::vector<std::string>>();
      if (row.contains("raw")) r.raw = row.at("raw").get<std::string>();
      run.reports.push_back(std::move(r));
    }
    return run;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("query run: ") + e.what());
  }
}

void WriteQueryRun(const std::string& path, const QueryRun& run) { WriteJsonFile(path, run.ToJson()); }

QueryRun ReadQueryRun(const std::string& path) { return QueryRun::FromJson(ReadJsonFile(path)); }

std::vector<std::string> Dedup(std::vector<std::string> queries) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (auto& q : queries) {
    if (seen.insert(q).second) out.push_back(std::move(q));
  }
  return out;
}

std::vector<std::string> ParseModelOutput(std::string_view output, datasets::PromptLanguage lang) {
  const std::string& prefix = datasets::Template(lang).output_prefix;
  const auto at = output.find(prefix);
  if (at == std::string_view::npos) return {};
  std::vector<std::string> queries;
  for (auto& q : datasets::SplitKeywords(output.substr(at + prefix.size()))) {
    if (!searchsim::NormalizeUtf8(q).empty()) queries.push_back(std::move(q));
  }
  return Dedup(std::move(queries));
}

QueryRun ExtractModel(const ModelExtractor& model, const corpus::Corpus& corpus, std::span<const corpus::Report> reports,
                      std::int64_t snapshot_version, std::string method) {
  if (model.params == nullptr || model.tokenizer == nullptr) throw ContractError("extract: model not loaded");
  const datasets::PromptTemplate& t = datasets::Template(model.language);
  QueryRun run{std::move(method), {}, snapshot_version};
  for (const auto& report : reports) {
    const std::string prompt = t.Instruction() + corpus.item(report.item_id).text;
    ReportQueries r;
    r.report_id = report.item_id;
    r.raw = lm::Generate(*model.params, nullptr, *model.tokenizer, prompt, model.generation);
    r.queries = ParseModelOutput(r.raw, model.language);
    run.reports.push_back(std::move(r));
  }
  return run;
}

QueryRun ExtractHuman(std::span<const corpus::Report> reports, std::int64_t snapshot_version) {
  QueryRun run{"human", {}, snapshot_version};
  for (const auto& report : reports) {
    run.reports.push_back(ReportQueries{report.item_id, Dedup(report.oracle_keywords), {}});
  }
  return run;
}

}  // namespace toxq::eval
