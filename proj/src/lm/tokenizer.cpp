// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/lm/tokenizer.hpp"

#include <algorithm>
#include <set>

#include "toxq/common/errors.hpp"
#include "toxq/common/utf8.hpp"

namespace toxq::lm {

Tokenizer Tokenizer::Build(const std::vector<std::string>& texts) {
  std::set<char32_t> seen;
  for (const auto& t : texts) {
    for (char32_t c : utf8::Decode(t)) seen.insert(c);
  }
  return FromCodePoints(std::vector<char32_t>(seen.begin(), seen.end()));
}

Tokenizer Tokenizer::FromCodePoints(std::vector<char32_t> chars) {
  std::sort(chars.begin(), chars.end());
  if (std::adjacent_find(chars.begin(), chars.end()) != chars.end()) {
    throw ValidationError("tokenizer: duplicate characters in vocabulary");
  }
  Tokenizer tok;
  tok.chars_ = std::move(chars);
  for (std::size_t i = 0; i < tok.chars_.size(); ++i) {
    tok.ids_.emplace(tok.chars_[i], static_cast<TokenId>(i) + kNumSpecial);
  }
  return tok;
}

TokenId Tokenizer::Lookup(char32_t c) const {
  const auto it = ids_.find(c);
  return it == ids_.end() ? kPad : it->second;
}

std::vector<TokenId> Tokenizer::Encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (char32_t c : utf8::Decode(text)) ids.push_back(Lookup(c));
  return ids;
}

std::string Tokenizer::Decode(std::span<const TokenId> ids) const {
  std::u32string out;
  for (TokenId id : ids) {
    if (id < kNumSpecial || static_cast<std::size_t>(id) >= size()) continue;
    out.push_back(chars_[static_cast<std::size_t>(id - kNumSpecial)]);
  }
  return utf8::Encode(out);
}

bool Tokenizer::IsNewline(TokenId id) const {
  return id >= kNumSpecial && static_cast<std::size_t>(id) < size() &&
         chars_[static_cast<std::size_t>(id - kNumSpecial)] == U'\n';
}

std::vector<TokenId> PromptIds(const Tokenizer& tok, std::string_view text) {
  std::vector<TokenId> ids{Tokenizer::kBos};
  const auto body = tok.Encode(text);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(Tokenizer::kSep);
  return ids;
}

std::vector<TokenId> LabelIds(const Tokenizer& tok, std::string_view text) {
  std::vector<TokenId> ids = tok.Encode(text);
  ids.push_back(Tokenizer::kEos);
  return ids;
}

}  // namespace toxq::lm
