// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration. One JSON file; every key is optional and falls
// back to the defaults below, which describe the default benchmark.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toxq/corpus/corpus.hpp"
#include "toxq/datasets/prompt.hpp"
#include "toxq/lm/model.hpp"
#include "toxq/training/trainer.hpp"

namespace toxq::orchestration {

// Overrides PipelineConfig::out_dir / the service port when set.
inline constexpr const char* kOutDirEnv = "TOXQ_OUT_DIR";
inline constexpr const char* kPortEnv = "TOXQ_PORT";

struct DatasetConfig {
  // Reports drawn from the history period; training data and feedback come
  // from them.
  std::int64_t history_reports = 480;
  double similarity = 0.4;
  std::int64_t max_members = 20;
  double threshold = 0.05;
  double ablation_threshold = 0.0;
  datasets::PromptLanguage language = datasets::PromptLanguage::kChinese;
};

struct PretrainConfig {
  std::int64_t epochs = 2;
  double learning_rate = 2e-3;
  std::int64_t batch_size = 16;
};

struct EvalConfig {
  std::int64_t test_reports = 402;
  std::int64_t tfidf_top_n = 1;
  std::int64_t max_new_tokens = 64;
};

struct PipelineConfig {
  corpus::CorpusConfig corpus;  // seed is replaced by each run seed
  DatasetConfig datasets;
  lm::ModelConfig model;        // vocab_size is derived from the corpus
  PretrainConfig pretrain;
  training::TrainConfig sft;
  training::TrainConfig dpo;
  EvalConfig eval;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "runs/default";

  PipelineConfig();

  // Throws ConfigError naming the first invalid field.
  void Validate() const;
  Json ToJson() const;
  static PipelineConfig FromJson(const Json& j);
  // Reads `path` (empty = defaults), then applies environment overrides.
  static PipelineConfig Load(const std::string& path);

  corpus::CorpusConfig CorpusFor(std::uint64_t seed, std::int64_t period) const;
};

// Port from TOXQ_PORT, else `fallback`. Throws ConfigError on a bad value.
int PortFromEnv(int fallback);

}  // namespace toxq::orchestration
