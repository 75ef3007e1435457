// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Substring search over undelimited text: character-bigram postings find
// candidates, a verification pass keeps exact substring matches, and a
// per-item risk score orders the survivors.
//
// The index separates immutable content (documents, postings, scores) from the
// tombstone set. Every reader works on an IndexView that pins one tombstone
// set and version; Remove() publishes a new set without touching views that
// are already out, which is what makes snapshots frozen.

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toxq/common/jsonl.hpp"
#include "toxq/corpus/corpus.hpp"

namespace toxq::searchsim {

using corpus::ItemId;

inline constexpr std::size_t kDefaultLimit = 100;

// ASCII lowercase; runs of whitespace become one space; ends trimmed.
std::u32string Normalize(std::string_view text);
std::string NormalizeUtf8(std::string_view text);

// Additive per-bigram log-odds of toxicity squashed by a logistic function.
// Bigrams never seen during fitting contribute 0.
class RiskScorer {
 public:
  RiskScorer() = default;

  // Weights are ln P(b | toxic) - ln P(b | normal), with document-presence
  // counts smoothed by adding one.
  static RiskScorer Fit(const std::vector<corpus::Item>& labeled);
  // Keys are two-character UTF-8 strings.
  static RiskScorer FromWeights(const std::unordered_map<std::string, double>& weights);

  bool fitted() const { return fitted_; }
  // Throws StateError when unfitted.
  double Score(std::string_view text) const;
  double Logit(std::string_view text) const;
  std::size_t size() const { return weights_.size(); }

  Json ToJson() const;
  static RiskScorer FromJson(const Json& j);

 private:
  bool fitted_ = false;
  std::unordered_map<std::uint64_t, double> weights_;
};

double RiskScore(const corpus::Item& item, const RiskScorer& scorer);

struct SearchResult {
  std::string query;
  std::vector<ItemId> ranked_ids;
  std::vector<double> scores;
  std::int64_t snapshot_version = 0;
};

struct FeedbackStats {
  std::string keyword;
  std::int64_t hit = 0;
  double toxic_rate = 0.0;
  std::int64_t toxic = 0;
  std::int64_t snapshot_version = 0;
};

// Immutable part of the index.
struct IndexCore {
  std::vector<corpus::Item> docs;  // ascending id
  std::vector<std::u32string> normalized;
  std::vector<double> scores;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> bigrams;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> unigrams;
  std::unordered_map<ItemId, std::uint32_t> position;
  RiskScorer scorer;
};

class IndexView {
 public:
  IndexView(std::shared_ptr<const IndexCore> core, std::shared_ptr<const std::vector<bool>> removed,
            std::int64_t version)
      : core_(std::move(core)), removed_(std::move(removed)), version_(version) {}

  // Throws ValidationError for an empty (after normalization) query or a
  // zero limit.
  SearchResult Search(std::string_view query, std::size_t limit = kDefaultLimit) const;
  FeedbackStats Feedback(std::string_view keyword, std::size_t limit = kDefaultLimit) const;

  std::int64_t version() const { return version_; }
  bool Contains(ItemId id) const;
  bool IsRemoved(ItemId id) const;
  const corpus::Item& item(ItemId id) const;
  std::size_t size() const { return core_->docs.size(); }
  const IndexCore& core() const { return *core_; }

 private:
  std::shared_ptr<const IndexCore> core_;
  std::shared_ptr<const std::vector<bool>> removed_;
  std::int64_t version_;
};

class InvertedIndex {
 public:
  // Throws ConfigError on an empty corpus, StateError on an unfitted scorer.
  static InvertedIndex Build(const corpus::Corpus& corpus, RiskScorer scorer);
  static InvertedIndex Build(std::vector<corpus::Item> items, RiskScorer scorer);

  InvertedIndex(const InvertedIndex& other);
  InvertedIndex& operator=(const InvertedIndex& other);

  SearchResult Search(std::string_view query, std::size_t limit = kDefaultLimit) const {
    return View().Search(query, limit);
  }
  FeedbackStats Feedback(std::string_view keyword, std::size_t limit = kDefaultLimit) const {
    return View().Feedback(keyword, limit);
  }

  // Tombstones id and returns the resulting version. Removing an already
  // removed id is a no-op. Throws NotFoundError for unknown ids.
  std::int64_t Remove(ItemId id);

  // Frozen view pinned to the current version.
  IndexView Snapshot() const { return View(); }
  IndexView View() const;

  std::int64_t version() const;
  std::vector<ItemId> Tombstones() const;
  const IndexCore& core() const { return *core_; }
  // Ascending ids of documents whose normalized text contains `bigram`.
  std::vector<ItemId> Postings(std::string_view bigram) const;

  // Line-delimited file: a header line carrying the version, one scorer line,
  // then one line per document. Postings are rebuilt on load.
  void Save(const std::string& path) const;
  static InvertedIndex Load(const std::string& path);

 private:
  InvertedIndex() = default;
  static InvertedIndex LoadUnchecked(const std::string& path);

  std::shared_ptr<const IndexCore> core_;
  mutable std::mutex mu_;
  std::shared_ptr<const std::vector<bool>> removed_;
  std::int64_t version_ = 0;
};

}  // namespace toxq::searchsim
