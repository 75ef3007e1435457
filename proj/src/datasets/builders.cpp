// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <numeric>

#include "toxq/common/rng.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/datasets/datasets.hpp"

namespace toxq::datasets {

namespace {

constexpr std::uint64_t kSampleSalt = 0xd5a1;

std::vector<std::uint64_t> BigramSet(std::string_view text) {
  const std::u32string s = searchsim::Normalize(text);
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) keys.push_back((static_cast<std::uint64_t>(s[i]) << 32) | s[i + 1]);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

double Jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t Find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<PairDecision> ScoreAnnotations(const std::vector<corpus::Report>& reports, const corpus::Corpus& corpus,
                                           const searchsim::IndexView& view) {
  std::vector<PairDecision> out;
  for (const auto& report : reports) {
    const corpus::Item& item = corpus.item(report.item_id);
    for (const auto& kw : report.oracle_keywords) {
      PairDecision d;
      d.pair.item_id = item.id;
      d.pair.category = item.category;
      d.pair.content = item.text;
      d.pair.keyword = kw;
      d.pair.length = static_cast<std::int64_t>(utf8::Length(kw));
      d.pair.hit = searchsim::Normalize(kw).empty() ? 0 : view.Feedback(kw).hit;
      d.admitted = AdmitKeyword(d.pair.length, d.pair.hit);
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<AnnotatedPair> BuildSftDataset(const std::vector<corpus::Report>& reports, const corpus::Corpus& corpus,
                                           const searchsim::IndexView& view) {
  std::vector<AnnotatedPair> out;
  for (auto& d : ScoreAnnotations(reports, corpus, view)) {
    if (d.admitted) out.push_back(std::move(d.pair));
  }
  return out;
}

double BigramJaccard(std::string_view a, std::string_view b) { return Jaccard(BigramSet(a), BigramSet(b)); }

std::vector<Group> ClusterGroups(const std::vector<AnnotatedPair>& pairs, double threshold) {
  std::vector<std::vector<std::uint64_t>> sets;
  sets.reserve(pairs.size());
  for (const auto& p : pairs) sets.push_back(BigramSet(p.content));
  UnionFind uf(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      if (pairs[i].category != pairs[j].category) continue;
      if (uf.Find(i) == uf.Find(j)) continue;
      if (Jaccard(sets[i], sets[j]) >= threshold) uf.Union(i, j);
    }
  }
  // Roots are the smallest index of their component, so iterating in input
  // order numbers groups by first member.
  std::map<std::size_t, std::size_t> group_of_root;
  std::vector<Group> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::size_t root = uf.Find(i);
    auto [it, fresh] = group_of_root.emplace(root, groups.size());
    if (fresh) {
      Group g;
      g.group_id = static_cast<std::int64_t>(groups.size());
      g.category = pairs[i].category;
      groups.push_back(std::move(g));
    }
    groups[it->second].members.push_back(pairs[i]);
  }
  return groups;
}

std::vector<GroupItem> GroupItems(const Group& group) {
  std::vector<GroupItem> items;
  for (const auto& m : group.members) {
    auto it = std::find_if(items.begin(), items.end(), [&](const GroupItem& g) { return g.item_id == m.item_id; });
    if (it == items.end()) {
      items.push_back(GroupItem{m.item_id, m.content, {}});
      it = items.end() - 1;
    }
    it->pairs.push_back(&m);
  }
  return items;
}

std::vector<GroupItem> SampleGroupItems(const Group& group, std::size_t max_members, std::uint64_t seed) {
  std::vector<GroupItem> items = GroupItems(group);
  if (items.size() <= max_members) return items;
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::Derive(seed, kSampleSalt, static_cast<std::uint64_t>(group.group_id));
  for (std::size_t i = 0; i < max_members; ++i) std::swap(idx[i], idx[i + rng.Index(idx.size() - i)]);
  idx.resize(max_members);
  std::sort(idx.begin(), idx.end());
  std::vector<GroupItem> out;
  for (std::size_t i : idx) out.push_back(std::move(items[i]));
  return out;
}

std::string JoinKeywords(const std::vector<std::string>& keywords) {
  std::string out;
  for (std::size_t i = 0; i < keywords.size(); ++i) {
    if (i > 0) out += ',';
    out += keywords[i];
  }
  return out;
}

std::vector<ConcatSample> BuildConcatDataset(const std::vector<Group>& groups, std::size_t max_members,
                                             std::uint64_t seed) {
  std::vector<ConcatSample> out;
  for (const auto& g : groups) {
    const auto items = SampleGroupItems(g, max_members, seed);
    if (items.size() < 2) continue;
    ConcatSample s;
    s.group_id = g.group_id;
    std::vector<std::string> contents;
    std::vector<std::string> keywords;
    for (const auto& it : items) {
      s.item_ids.push_back(it.item_id);
      contents.push_back(it.content);
      for (const auto* p : it.pairs) {
        if (std::find(keywords.begin(), keywords.end(), p->keyword) == keywords.end()) keywords.push_back(p->keyword);
      }
    }
    s.content = JoinKeywords(contents);
    s.keywords = JoinKeywords(keywords);
    out.push_back(std::move(s));
  }
  return out;
}

std::string PreferenceTriple::PreferredText() const {
  std::vector<std::string> k;
  for (const auto& s : preferred) k.push_back(s.keyword);
  return JoinKeywords(k);
}

std::string PreferenceTriple::DispreferredText() const {
  std::vector<std::string> k;
  for (const auto& s : dispreferred) k.push_back(s.keyword);
  return JoinKeywords(k);
}

std::vector<PreferenceTriple> BuildPreferenceDataset(const std::vector<Group>& groups,
                                                     const searchsim::IndexView& view, double threshold,
                                                     std::size_t max_members, std::uint64_t seed) {
  std::vector<PreferenceTriple> out;
  for (const auto& g : groups) {
    const auto items = SampleGroupItems(g, max_members, seed);
    PreferenceTriple t;
    t.group_id = g.group_id;
    std::vector<std::string> contents;
    std::vector<std::string> seen;
    for (const auto& it : items) {
      t.item_ids.push_back(it.item_id);
      contents.push_back(it.content);
      for (const auto* p : it.pairs) {
        if (std::find(seen.begin(), seen.end(), p->keyword) != seen.end()) continue;
        seen.push_back(p->keyword);
        const auto stats = view.Feedback(p->keyword);
        ScoredKeyword sk{p->keyword, stats.toxic_rate, stats.hit};
        (stats.toxic_rate > threshold ? t.preferred : t.dispreferred).push_back(std::move(sk));
      }
    }
    if (t.preferred.empty() || t.dispreferred.empty()) continue;
    t.content = JoinKeywords(contents);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace toxq::datasets
