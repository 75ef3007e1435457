// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "toxq/common/errors.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::searchsim {

namespace {

std::uint64_t Key(char32_t a, char32_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

std::vector<std::uint64_t> DistinctBigrams(const std::u32string& s) {
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) keys.push_back(Key(s[i], s[i + 1]));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

}  // namespace

RiskScorer RiskScorer::Fit(const std::vector<corpus::Item>& labeled) {
  std::unordered_map<std::uint64_t, std::pair<std::int64_t, std::int64_t>> counts;
  std::int64_t n_toxic = 0;
  std::int64_t n_normal = 0;
  for (const auto& item : labeled) {
    (item.is_toxic ? n_toxic : n_normal) += 1;
    for (std::uint64_t k : DistinctBigrams(Normalize(item.text))) {
      auto& c = counts[k];
      (item.is_toxic ? c.first : c.second) += 1;
    }
  }
  RiskScorer s;
  s.fitted_ = true;
  const double tox_den = std::log(static_cast<double>(n_toxic) + 2.0);
  const double norm_den = std::log(static_cast<double>(n_normal) + 2.0);
  for (const auto& [k, c] : counts) {
    s.weights_[k] = (std::log(static_cast<double>(c.first) + 1.0) - tox_den) -
                    (std::log(static_cast<double>(c.second) + 1.0) - norm_den);
  }
  return s;
}

RiskScorer RiskScorer::FromWeights(const std::unordered_map<std::string, double>& weights) {
  RiskScorer s;
  s.fitted_ = true;
  for (const auto& [bigram, w] : weights) {
    const std::u32string b = utf8::Decode(bigram);
    if (b.size() != 2) throw ValidationError("risk scorer: weight key '" + bigram + "' is not a bigram");
    s.weights_[Key(b[0], b[1])] = w;
  }
  return s;
}

double RiskScorer::Logit(std::string_view text) const {
  if (!fitted_) throw StateError("risk scorer used before fitting");
  double z = 0.0;
  for (std::uint64_t k : DistinctBigrams(Normalize(text))) {
    const auto it = weights_.find(k);
    if (it != weights_.end()) z += it->second;
  }
  return z;
}

double RiskScorer::Score(std::string_view text) const {
  const double z = Logit(text);
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Json RiskScorer::ToJson() const {
  if (!fitted_) throw StateError("risk scorer serialized before fitting");
  std::vector<std::pair<std::uint64_t, double>> sorted(weights_.begin(), weights_.end());
  std::sort(sorted.begin(), sorted.end());
  Json rows = Json::array();
  for (const auto& [k, w] : sorted) {
    std::u32string b{static_cast<char32_t>(k >> 32), static_cast<char32_t>(k & 0xffffffffu)};
    rows.push_back(Json::array({utf8::Encode(b), w}));
  }
  return Json{{"kind", "bigram_log_odds"}, {"weights", rows}};
}

RiskScorer RiskScorer::FromJson(const Json& j) {
  if (!j.is_object() || j.value("kind", "") != "bigram_log_odds" || !j.contains("weights")) {
    throw ValidationError("risk scorer: unrecognized serialized form");
  }
  RiskScorer s;
  s.fitted_ = true;
  for (const Json& row : j.at("weights")) {
    const std::u32string b = utf8::Decode(row.at(0).get<std::string>());
    if (b.size() != 2) throw ValidationError("risk scorer: malformed bigram key");
    s.weights_[Key(b[0], b[1])] = row.at(1).get<double>();
  }
  return s;
}

double RiskScore(const corpus::Item& item, const RiskScorer& scorer) { return scorer.Score(item.text); }

}  // namespace toxq::searchsim
