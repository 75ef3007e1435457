// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "toxq/common/errors.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::searchsim {

namespace {

std::uint64_t Key(char32_t a, char32_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

const std::vector<std::uint32_t> kEmpty;

const std::vector<std::uint32_t>& Lookup(const std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>& m,
                                         std::uint64_t key) {
  const auto it = m.find(key);
  return it == m.end() ? kEmpty : it->second;
}

void Post(std::vector<std::uint32_t>& list, std::uint32_t pos) {
  if (list.empty() || list.back() != pos) list.push_back(pos);
}

std::vector<std::uint32_t> Intersect(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::vector<std::uint32_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

InvertedIndex InvertedIndex::Build(const corpus::Corpus& corpus, RiskScorer scorer) {
  return Build(corpus.items, std::move(scorer));
}

InvertedIndex InvertedIndex::Build(std::vector<corpus::Item> items, RiskScorer scorer) {
  if (items.empty()) throw ConfigError("build_index: corpus is empty");
  if (!scorer.fitted()) throw StateError("build_index: risk scorer is not fitted");
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  auto core = std::make_shared<IndexCore>();
  core->docs = std::move(items);
  core->normalized.reserve(core->docs.size());
  core->scores.reserve(core->docs.size());
  for (std::uint32_t pos = 0; pos < core->docs.size(); ++pos) {
    const auto& doc = core->docs[pos];
    if (!core->position.emplace(doc.id, pos).second) {
      throw ValidationError("build_index: duplicate item id " + std::to_string(doc.id));
    }
    std::u32string norm = Normalize(doc.text);
    // Positions grow with pos, so appending keeps every list ascending.
    for (std::size_t i = 0; i < norm.size(); ++i) {
      Post(core->unigrams[norm[i]], pos);
      if (i + 1 < norm.size()) Post(core->bigrams[Key(norm[i], norm[i + 1])], pos);
    }
    core->normalized.push_back(std::move(norm));
    core->scores.push_back(scorer.Score(doc.text));
  }
  core->scorer = std::move(scorer);

  InvertedIndex index;
  index.removed_ = std::make_shared<const std::vector<bool>>(core->docs.size(), false);
  index.core_ = std::move(core);
  return index;
}

InvertedIndex::InvertedIndex(const InvertedIndex& other) {
  std::lock_guard lock(other.mu_);
  core_ = other.core_;
  removed_ = other.removed_;
  version_ = other.version_;
}

InvertedIndex& InvertedIndex::operator=(const InvertedIndex& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  core_ = other.core_;
  removed_ = other.removed_;
  version_ = other.version_;
  return *this;
}

IndexView InvertedIndex::View() const {
  std::lock_guard lock(mu_);
  return IndexView(core_, removed_, version_);
}

std::int64_t InvertedIndex::version() const {
  std::lock_guard lock(mu_);
  return version_;
}

std::int64_t InvertedIndex::Remove(ItemId id) {
  const auto it = core_->position.find(id);
  if (it == core_->position.end()) throw NotFoundError("remove_item: unknown item id " + std::to_string(id));
  std::lock_guard lock(mu_);
  if ((*removed_)[it->second]) return version_;
  auto next = std::make_shared<std::vector<bool>>(*removed_);
  (*next)[it->second] = true;
  removed_ = std::move(next);
  return ++version_;
}

std::vector<ItemId> InvertedIndex::Tombstones() const {
  const IndexView view = View();
  std::vector<ItemId> out;
  for (const auto& doc : core_->docs) {
    if (view.IsRemoved(doc.id)) out.push_back(doc.id);
  }
  return out;
}

std::vector<ItemId> InvertedIndex::Postings(std::string_view bigram) const {
  const std::u32string b = Normalize(bigram);
  if (b.size() != 2) throw ValidationError("postings: '" + std::string(bigram) + "' is not a bigram");
  std::vector<ItemId> ids;
  for (std::uint32_t pos : Lookup(core_->bigrams, Key(b[0], b[1]))) ids.push_back(core_->docs[pos].id);
  return ids;
}

bool IndexView::Contains(ItemId id) const { return core_->position.count(id) > 0; }

bool IndexView::IsRemoved(ItemId id) const {
  const auto it = core_->position.find(id);
  if (it == core_->position.end()) throw NotFoundError("unknown item id " + std::to_string(id));
  return (*removed_)[it->second];
}

const corpus::Item& IndexView::item(ItemId id) const {
  const auto it = core_->position.find(id);
  if (it == core_->position.end()) throw NotFoundError("unknown item id " + std::to_string(id));
  return core_->docs[it->second];
}

SearchResult IndexView::Search(std::string_view query, std::size_t limit) const {
  if (limit == 0) throw ValidationError("search: limit must be >= 1");
  const std::u32string q = Normalize(query);
  if (q.empty()) throw ValidationError("search: query is empty");

  std::vector<std::uint32_t> candidates;
  if (q.size() == 1) {
    candidates = Lookup(core_->unigrams, q[0]);
  } else {
    std::vector<const std::vector<std::uint32_t>*> lists;
    for (std::size_t i = 0; i + 1 < q.size(); ++i) lists.push_back(&Lookup(core_->bigrams, Key(q[i], q[i + 1])));
    std::sort(lists.begin(), lists.end(), [](const auto* a, const auto* b) { return a->size() < b->size(); });
    lists.erase(std::unique(lists.begin(), lists.end()), lists.end());
    candidates = *lists.front();
    for (std::size_t i = 1; i < lists.size() && !candidates.empty(); ++i) candidates = Intersect(candidates, *lists[i]);
  }

  std::vector<std::uint32_t> matches;
  for (std::uint32_t pos : candidates) {
    if ((*removed_)[pos]) continue;
    if (q.size() > 2 && core_->normalized[pos].find(q) == std::u32string::npos) continue;
    matches.push_back(pos);
  }
  const auto& scores = core_->scores;
  const auto& docs = core_->docs;
  auto by_rank = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return docs[a].id < docs[b].id;
  };
  const std::size_t keep = std::min(limit, matches.size());
  std::partial_sort(matches.begin(), matches.begin() + static_cast<std::ptrdiff_t>(keep), matches.end(), by_rank);
  matches.resize(keep);

  SearchResult result;
  result.query = utf8::Encode(q);
  result.snapshot_version = version_;
  for (std::uint32_t pos : matches) {
    result.ranked_ids.push_back(docs[pos].id);
    result.scores.push_back(scores[pos]);
  }
  return result;
}

FeedbackStats IndexView::Feedback(std::string_view keyword, std::size_t limit) const {
  const SearchResult r = Search(keyword, limit);
  FeedbackStats s;
  s.keyword = std::string(keyword);
  s.hit = static_cast<std::int64_t>(r.ranked_ids.size());
  s.snapshot_version = r.snapshot_version;
  for (ItemId id : r.ranked_ids) s.toxic += item(id).is_toxic ? 1 : 0;
  s.toxic_rate = s.hit > 0 ? static_cast<double>(s.toxic) / static_cast<double>(s.hit) : 0.0;
  return s;
}

}  // namespace toxq::searchsim
