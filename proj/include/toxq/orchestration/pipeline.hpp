// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "toxq/orchestration/stages.hpp"

namespace toxq::orchestration {

// Method names in comparison tables.
inline constexpr const char* kHuman = "human";
inline constexpr const char* kTfIdf = "tfidf";
inline constexpr const char* kSftOnly = "sft";
inline constexpr const char* kQExplorer = "qexplorer";
inline constexpr const char* kQExplorerAblation = "qexplorer_comp2";

struct SeedRun {
  std::uint64_t seed = 0;
  fs::path dir;
  std::vector<StageOutcome> stages;
  Json datasets;    // make-datasets summary
  Json comparison;  // evaluate summary
  std::vector<double> dpo_margins;
  std::vector<double> ablation_margins;

  // Query Hit Rate of `method`; throws NotFoundError.
  double QueryHitRate(const std::string& method) const;
};

struct PipelineResult {
  std::vector<SeedRun> seeds;
  Json aggregate;
  std::string aggregate_text;
};

using Progress = std::function<void(const std::string&)>;

// gen-corpus -> build-index -> make-datasets -> train-sft -> train-dpo ->
// evaluate for each seed under out_dir/seed-<n>, then aggregate.json and
// aggregate.txt in out_dir.
PipelineResult RunPipeline(const PipelineConfig& config, const Progress& progress = {});

}  // namespace toxq::orchestration
