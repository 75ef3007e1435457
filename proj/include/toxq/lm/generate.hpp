// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toxq/lm/model.hpp"
#include "toxq/lm/tokenizer.hpp"

namespace toxq::lm {

struct GenerationConfig {
  enum class Mode { kGreedy, kSample };
  Mode mode = Mode::kGreedy;
  std::int64_t max_new_tokens = 48;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  bool stop_at_newline = true;

  // Throws ConfigError.
  void Validate() const;
};

// New token ids after `prompt`, excluding the stop token. Stops at eos, at a
// newline (if enabled and a tokenizer is given), after max_new_tokens, or when
// the context is full.
// Prompts longer than the context lose tokens from the head, keeping room for
// min(max_new_tokens, context/2) new tokens.
std::vector<TokenId> GenerateIds(const ModelParams& params, const LoraAdapter* adapter,
                                 const std::vector<TokenId>& prompt, const GenerationConfig& config,
                                 const Tokenizer* tokenizer = nullptr);

// Encodes `prompt_text` as [bos] text [sep] and decodes the continuation.
std::string Generate(const ModelParams& params, const LoraAdapter* adapter, const Tokenizer& tokenizer,
                     const std::string& prompt_text, const GenerationConfig& config);

}  // namespace toxq::lm
