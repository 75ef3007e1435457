// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Small fixed-seed benchmark pieces shared across test binaries.

#pragma once

#include <string>
#include <vector>

#include "toxq/corpus/corpus.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::fixtures {

inline corpus::Item Doc(corpus::ItemId id, std::string text, bool toxic = false, int category = 0) {
  corpus::Item it;
  it.id = id;
  it.text = std::move(text);
  it.is_toxic = toxic;
  it.category = category;
  if (toxic) it.campaign_id = 0;
  return it;
}

struct History {
  corpus::Corpus corpus;
  std::vector<corpus::Report> reports;
  searchsim::InvertedIndex index;
};

// History-period corpus with `n_reports` reports tombstoned, as the pipeline
// prepares it.
inline History MakeHistory(std::uint64_t seed, std::int64_t n_reports, std::int64_t n_items = 10000,
                           std::int64_t n_campaigns = 60) {
  corpus::CorpusConfig cfg;
  cfg.seed = seed;
  cfg.n_items = n_items;
  cfg.n_campaigns = n_campaigns;
  auto c = corpus::GenerateCorpus(cfg);
  auto reports = corpus::SampleReports(c, n_reports, seed);
  auto index = searchsim::InvertedIndex::Build(c, searchsim::RiskScorer::Fit(c.items));
  for (const auto& r : reports) index.Remove(r.item_id);
  return History{std::move(c), std::move(reports), std::move(index)};
}

}  // namespace toxq::fixtures
