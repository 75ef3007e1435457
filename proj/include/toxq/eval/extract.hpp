// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Query extractors: the trained model, the oracle-human annotations, and a
// TF-IDF baseline. Each produces a QueryRun bound to one snapshot version.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toxq/corpus/corpus.hpp"
#include "toxq/datasets/prompt.hpp"
#include "toxq/lm/generate.hpp"

namespace toxq::eval {

struct ReportQueries {
  corpus::ItemId report_id = 0;
  std::vector<std::string> queries;
  std::string raw;  // model output; empty for other extractors
};

struct QueryRun {
  std::string method;
  std::vector<ReportQueries> reports;
  std::int64_t snapshot_version = 0;

  Json ToJson() const;
  static QueryRun FromJson(const Json& j);
};

void WriteQueryRun(const std::string& path, const QueryRun& run);
QueryRun ReadQueryRun(const std::string& path);

// Keywords after the output prefix, split on commas, first occurrence kept.
// Output without the prefix yields no queries.
std::vector<std::string> ParseModelOutput(std::string_view output, datasets::PromptLanguage lang);

// Order-preserving removal of repeated strings.
std::vector<std::string> Dedup(std::vector<std::string> queries);

struct ModelExtractor {
  const lm::ModelParams* params = nullptr;  // adapter already merged
  const lm::Tokenizer* tokenizer = nullptr;
  datasets::PromptLanguage language = datasets::PromptLanguage::kEnglish;
  lm::GenerationConfig generation;
};

// One greedy generation per report over the instruction + item text.
QueryRun ExtractModel(const ModelExtractor& model, const corpus::Corpus& corpus, std::span<const corpus::Report> reports,
                      std::int64_t snapshot_version, std::string method = "model");

// The reports' oracle keywords.
QueryRun ExtractHuman(std::span<const corpus::Report> reports, std::int64_t snapshot_version);

struct ScoredTerm {
  std::string term;
  double score = 0.0;
};

// Character n-gram TF-IDF over normalized text; n-grams containing
// whitespace are not terms. idf = ln(N / df).
class TfIdf {
 public:
  static TfIdf Fit(const std::vector<std::string>& documents, std::size_t min_n = 2, std::size_t max_n = 4);

  // Terms of `text` by tf * idf descending, ties by byte-wise term order.
  // Terms absent from the fitted documents are skipped.
  std::vector<ScoredTerm> Rank(std::string_view text) const;
  double Idf(std::string_view term) const;
  std::size_t n_documents() const { return n_docs_; }

 private:
  std::unordered_map<std::string, std::int64_t> df_;
  std::size_t n_docs_ = 0;
  std::size_t min_n_ = 2, max_n_ = 4;
};

// Term multiset of `text`: every n-gram of the normalized text for n in
// [min_n, max_n], skipping those with whitespace.
std::unordered_map<std::string, std::int64_t> CharNgrams(std::string_view text, std::size_t min_n, std::size_t max_n);

// Top `top_n` terms per report, with document frequencies from `corpus`.
QueryRun ExtractTfIdf(const corpus::Corpus& corpus, std::span<const corpus::Report> reports, std::size_t top_n,
                      std::int64_t snapshot_version);

}  // namespace toxq::eval
