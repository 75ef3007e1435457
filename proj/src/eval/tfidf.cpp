// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "toxq/common/errors.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/eval/extract.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::eval {

namespace {

bool IsSpace(char32_t c) { return c == U' '; }

}  // namespace

std::unordered_map<std::string, std::int64_t> CharNgrams(std::string_view text, std::size_t min_n, std::size_t max_n) {
  const std::u32string norm = searchsim::Normalize(text);
  std::unordered_map<std::string, std::int64_t> terms;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    for (std::size_t n = min_n; n <= max_n && i + n <= norm.size(); ++n) {
      if (IsSpace(norm[i + n - 1])) break;
      if (n == min_n &&
          std::any_of(norm.begin() + static_cast<std::ptrdiff_t>(i),
                      norm.begin() + static_cast<std::ptrdiff_t>(i + n), IsSpace)) {
        break;
      }
      ++terms[utf8::Encode(std::u32string_view(norm).substr(i, n))];
    }
  }
  return terms;
}

TfIdf TfIdf::Fit(const std::vector<std::string>& documents, std::size_t min_n, std::size_t max_n) {
  if (min_n < 1 || max_n < min_n) throw ConfigError("tfidf: need 1 <= min_n <= max_n");
  TfIdf m;
  m.min_n_ = min_n;
  m.max_n_ = max_n;
  m.n_docs_ = documents.size();
  for (const auto& doc : documents) {
    for (const auto& [term, count] : CharNgrams(doc, min_n, max_n)) ++m.df_[term];
  }
  return m;
}

double TfIdf::Idf(std::string_view term) const {
  const auto it = df_.find(std::string(term));
  if (it == df_.end()) return 0.0;
  return std::log(static_cast<double>(n_docs_) / static_cast<double>(it->second));
}

std::vector<ScoredTerm> TfIdf::Rank(std::string_view text) const {
  std::vector<ScoredTerm> out;
  for (const auto& [term, tf] : CharNgrams(text, min_n_, max_n_)) {
    if (!df_.contains(term)) continue;
    out.push_back(ScoredTerm{term, static_cast<double>(tf) * Idf(term)});
  }
  std::sort(out.begin(), out.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });
  return out;
}

QueryRun ExtractTfIdf(const corpus::Corpus& corpus, std::span<const corpus::Report> reports, std::size_t top_n,
                      std::int64_t snapshot_version) {
  std::vector<std::string> docs;
  docs.reserve(corpus.items.size());
  for (const auto& item : corpus.items) docs.push_back(item.text);
  const TfIdf model = TfIdf::Fit(docs);
  QueryRun run{"tfidf", {}, snapshot_version};
  for (const auto& report : reports) {
    ReportQueries r;
    r.report_id = report.item_id;
    for (const auto& t : model.Rank(corpus.item(report.item_id).text)) {
      if (r.queries.size() >= top_n) break;
      r.queries.push_back(t.term);
    }
    run.reports.push_back(std::move(r));
  }
  return run;
}

}  // namespace toxq::eval
