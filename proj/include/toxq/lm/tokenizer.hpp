// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace toxq::lm {

using TokenId = std::int32_t;

// Character-level vocabulary. Ids 0-3 are pad, bos, eos and sep; characters
// follow in code point order. Characters outside the vocabulary encode as pad.
class Tokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kNumSpecial = 4;

  Tokenizer() = default;
  static Tokenizer Build(const std::vector<std::string>& texts);
  static Tokenizer FromCodePoints(std::vector<char32_t> chars);

  std::vector<TokenId> Encode(std::string_view text) const;
  // Specials are skipped.
  std::string Decode(std::span<const TokenId> ids) const;

  std::size_t size() const { return chars_.size() + kNumSpecial; }
  const std::vector<char32_t>& chars() const { return chars_; }
  TokenId Lookup(char32_t c) const;
  bool IsNewline(TokenId id) const;

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, TokenId> ids_;
};

// [bos] text [sep]
std::vector<TokenId> PromptIds(const Tokenizer& tok, std::string_view text);
// text [eos]
std::vector<TokenId> LabelIds(const Tokenizer& tok, std::string_view text);

}  // namespace toxq::lm
