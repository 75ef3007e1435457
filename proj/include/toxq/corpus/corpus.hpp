// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic marketplace corpus with planted toxic campaigns.
//
// Text is written without word delimiters, the way Chinese listings are, so
// the unit of retrieval is an arbitrary substring. Each campaign plants its
// signature phrases verbatim in every member item and surrounds them with
// ordinary marketplace vocabulary; signature phrases never occur in any
// other item. Campaign definitions depend only on the seed, item streams on
// (seed, period), so several periods share the same campaigns.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "toxq/common/jsonl.hpp"

namespace toxq::corpus {

using ItemId = std::int64_t;
using CampaignId = std::int64_t;

struct CorpusConfig {
  std::uint64_t seed = 7;
  std::int64_t n_items = 10000;
  double toxic_fraction = 0.05;
  std::int64_t n_campaigns = 10;
  std::int64_t n_categories = 8;
  // Probability that the simulated auditor marks a verbose or over-broad
  // phrase instead of a signature phrase.
  double annotation_noise = 0.3;
  // Item stream selector; campaigns are shared across periods.
  std::int64_t period = 0;

  // Throws ConfigError naming the violated bound.
  void Validate() const;
  std::int64_t ToxicCount() const;
};

struct Item {
  ItemId id = 0;
  int category = 0;
  bool is_toxic = false;
  std::optional<CampaignId> campaign_id;
  std::string text;  // UTF-8
  std::int64_t created_at = 0;
};

struct Campaign {
  CampaignId id = 0;
  int category = 0;
  std::vector<std::string> signature_phrases;
  std::vector<std::string> disguise_vocabulary;
  // Slot sequence such as "{D}{S0}{F}{S1}{D}": S<i> is signature phrase i,
  // D a disguise word, F an ordinary filler word.
  std::string template_text;
};

struct Corpus {
  CorpusConfig config;
  std::vector<Item> items;
  std::vector<Campaign> campaigns;

  // Throw NotFoundError on unknown ids.
  const Item& item(ItemId id) const;
  const Campaign& campaign(CampaignId id) const;
  std::size_t ToxicCount() const;

  // Rebuilds the id lookup tables; call after mutating items/campaigns.
  void Reindex();

 private:
  std::unordered_map<ItemId, std::size_t> item_pos_;
  std::unordered_map<CampaignId, std::size_t> campaign_pos_;
};

struct Report {
  ItemId item_id = 0;
  std::vector<std::string> oracle_keywords;
  std::int64_t tick = 0;
};

// Members per campaign: one each while supply lasts, the rest split in
// proportion to 1/(id+1). Sums to n_toxic; identical in every period.
std::vector<std::int64_t> CampaignSizes(std::int64_t n_toxic, std::int64_t n_campaigns);

Corpus GenerateCorpus(const CorpusConfig& config);

// Simulated auditor annotation for a reported toxic item. With probability
// 1 - noise returns one or two signature phrases; otherwise a verbose window
// (> 10 characters) around a signature phrase, a disguise word, or a
// signature phrase with misplaced edges.
// Every keyword is a substring of item.text. Throws ContractError when the
// item is not a toxic member of `campaign`.
std::vector<std::string> OracleAnnotate(const Item& item, const Campaign& campaign, double noise,
                                        std::uint64_t seed);

// Samples n distinct toxic items uniformly and annotates them. Reports are
// returned in ascending item id order. Throws CapacityError when the corpus
// holds fewer than n toxic items.
std::vector<Report> SampleReports(const Corpus& corpus, std::int64_t n, std::uint64_t seed);

// Persistence: items.jsonl, campaigns.jsonl and config.json under `dir`.
Json ToJson(const CorpusConfig& config);
// Missing keys keep their defaults. Throws ConfigError.
CorpusConfig CorpusConfigFromJson(const Json& j);

void WriteCorpus(const Corpus& corpus, const std::string& dir);
Corpus ReadCorpus(const std::string& dir);
void WriteReports(const std::vector<Report>& reports, const std::string& path);
std::vector<Report> ReadReports(const std::string& path);

}  // namespace toxq::corpus
