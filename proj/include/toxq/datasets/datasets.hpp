// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Training data built from reports and search feedback: annotated pairs (D),
// concatenated group samples (D_cat) and preference triples (D_comp).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toxq/corpus/corpus.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::datasets {

using corpus::ItemId;

struct AnnotatedPair {
  ItemId item_id = 0;
  int category = 0;
  std::string content;
  std::string keyword;
  std::int64_t hit = 0;
  std::int64_t length = 0;  // characters
};

// Admission rule for an annotated keyword: at least two characters, and
// either it retrieves something or it is at most ten characters long.
inline bool AdmitKeyword(std::int64_t length, std::int64_t hit) { return length >= 2 && (hit > 0 || length <= 10); }

struct PairDecision {
  AnnotatedPair pair;
  bool admitted = false;
};

// Every (report, keyword) candidate with its admission decision, in report
// order then keyword order. hit comes from Feedback() on `view`.
std::vector<PairDecision> ScoreAnnotations(const std::vector<corpus::Report>& reports, const corpus::Corpus& corpus,
                                           const searchsim::IndexView& view);

// The admitted subset of ScoreAnnotations.
std::vector<AnnotatedPair> BuildSftDataset(const std::vector<corpus::Report>& reports, const corpus::Corpus& corpus,
                                           const searchsim::IndexView& view);

struct Group {
  std::int64_t group_id = 0;
  int category = 0;
  std::vector<AnnotatedPair> members;
};

inline constexpr double kDefaultSimilarity = 0.4;

// Jaccard similarity of the character-bigram sets of two texts (after
// normalization). Two texts without bigrams have similarity 1 if equal.
double BigramJaccard(std::string_view a, std::string_view b);

// Connected components of the graph linking same-category pairs whose
// contents have BigramJaccard >= threshold. Groups are numbered by their first
// member; members keep input order.
std::vector<Group> ClusterGroups(const std::vector<AnnotatedPair>& pairs, double threshold = kDefaultSimilarity);

struct ConcatSample {
  std::int64_t group_id = 0;
  std::vector<ItemId> item_ids;
  std::string content;   // member contents joined with ','
  std::string keywords;  // member keywords, deduplicated, joined with ','
};

inline constexpr std::size_t kMaxMembers = 20;

// Distinct items of a group, in first-appearance order, each with its
// keywords in annotation order.
struct GroupItem {
  ItemId item_id = 0;
  std::string content;
  std::vector<const AnnotatedPair*> pairs;
};
std::vector<GroupItem> GroupItems(const Group& group);

// Up to max_members distinct items of the group drawn with a per-group
// stream of `seed`, kept in group order.
std::vector<GroupItem> SampleGroupItems(const Group& group, std::size_t max_members, std::uint64_t seed);

// Groups with fewer than two distinct items are skipped.
std::vector<ConcatSample> BuildConcatDataset(const std::vector<Group>& groups, std::size_t max_members,
                                             std::uint64_t seed);

struct ScoredKeyword {
  std::string keyword;
  double toxic_rate = 0.0;
  std::int64_t hit = 0;
};

struct PreferenceTriple {
  std::int64_t group_id = 0;
  std::vector<ItemId> item_ids;
  std::string content;
  std::vector<ScoredKeyword> preferred;     // toxic_rate > threshold
  std::vector<ScoredKeyword> dispreferred;  // toxic_rate <= threshold
  std::string PreferredText() const;
  std::string DispreferredText() const;
};

inline constexpr double kDefaultThreshold = 0.05;

// Per group: the same member sample as BuildConcatDataset, its distinct
// keywords partitioned by toxic rate on `view`. A triple is emitted only when
// both sides are non-empty.
std::vector<PreferenceTriple> BuildPreferenceDataset(const std::vector<Group>& groups,
                                                     const searchsim::IndexView& view, double threshold,
                                                     std::size_t max_members, std::uint64_t seed);

std::string JoinKeywords(const std::vector<std::string>& keywords);

}  // namespace toxq::datasets
