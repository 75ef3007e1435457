// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Training stages: full-parameter language-model pretraining, adapter SFT,
// and adapter preference alignment against a frozen reference.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "toxq/datasets/prompt.hpp"
#include "toxq/lm/tokenizer.hpp"
#include "toxq/training/adamw.hpp"
#include "toxq/training/losses.hpp"

namespace toxq::training {

struct TrainConfig {
  double learning_rate = 3e-5;
  std::int64_t sft_epochs = 2;
  std::int64_t dpo_epochs = 5;
  double beta = 0.1;
  double gamma = 1.0;
  std::int64_t batch_size = 8;
  std::uint64_t seed = 0;
  std::int64_t cutoff = 512;
  double weight_decay = 0.0;
  std::int64_t lora_rank = 8;
  double lora_alpha = 16.0;

  // Throws ConfigError naming the violated bound.
  void Validate() const;
  AdamWConfig Optimizer() const;
  Json ToJson() const;
  // Missing keys keep their defaults.
  static TrainConfig FromJson(const Json& j);
};

struct SftExample {
  std::vector<lm::TokenId> prompt;
  std::vector<lm::TokenId> label;
};

struct PreferenceExample {
  std::vector<lm::TokenId> prompt;
  std::vector<lm::TokenId> chosen;
  std::vector<lm::TokenId> rejected;
};

SftExample Encode(const lm::Tokenizer& tok, const datasets::SftRecord& record);
PreferenceExample Encode(const lm::Tokenizer& tok, const datasets::PreferenceRecord& record);

struct EpochLog {
  std::string stage;
  std::int64_t epoch = 0;
  std::int64_t step = 0;  // optimizer steps taken so far
  double loss = 0.0;      // mean over the epoch's batches
  double margin = 0.0;
  std::uint64_t seed = 0;
  Json ToJson() const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct AdapterResult {
  lm::LoraAdapter adapter;
  std::vector<EpochLog> logs;
};

// Updates every parameter of `params` with the label-only objective on
// sequences [bos] + text + [eos].
std::vector<EpochLog> Pretrain(lm::ModelParams& params, std::span<const std::vector<lm::TokenId>> texts,
                               std::int64_t epochs, const TrainConfig& config, const EpochCallback& on_epoch = {});

// Fresh adapter over `base`, trained on the SFT objective. `base` is not
// modified.
AdapterResult TrainSft(const lm::ModelParams& base, std::span<const SftExample> data, const TrainConfig& config,
                       const EpochCallback& on_epoch = {});

// `reference` (the SFT model with its adapter merged) is both the frozen
// reference policy and the base of a fresh adapter trained on the combined
// objective.
AdapterResult TrainDpo(const lm::ModelParams& reference, std::span<const PreferenceExample> data,
                       const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace toxq::training
