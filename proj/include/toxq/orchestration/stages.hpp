// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Pipeline stages. Each stage reads files written by earlier stages and
// writes its own directory; the CLI subcommands call these directly.
//
// Stage directories carry a manifest.json with a hash of the stage inputs
// and a SHA-256 per output file. A stage whose manifest matches its inputs
// and whose outputs are intact is skipped.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include "toxq/orchestration/config.hpp"

namespace toxq::orchestration {

namespace fs = std::filesystem;

// A stage failed; what() names the stage and carries the underlying report.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& report)
      : std::runtime_error("stage " + stage + " failed: " + report), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageOutcome {
  std::string stage;
  bool skipped = false;
  std::string inputs_hash;
  std::string outputs_hash;  // over the manifest's file table
  Json summary;
};

// Runs `body` (which fills `dir` and returns a summary) unless the manifest
// in `dir` already records `inputs_hash` with intact outputs. The directory
// is emptied before `body` runs. Failures are rethrown as StageError.
StageOutcome RunStage(const std::string& stage, const fs::path& dir, const std::string& inputs_hash,
                      const std::function<Json()>& body);

// Hash of a stage's recorded outputs, read back from its manifest.
std::string OutputsHash(const fs::path& dir);

// history/ and test/ corpora plus history_reports.jsonl and
// test_reports.jsonl.
Json GenCorpusStage(const PipelineConfig& config, std::uint64_t seed, const fs::path& out);

// scorer.json (fitted on the history corpus), history.index and test.index
// with each period's reported items removed.
Json BuildIndexStage(const fs::path& corpus_dir, const fs::path& out);

// pairs.jsonl (D), concat.jsonl (D_cat), sft.jsonl (D + D_cat rendered),
// pref.jsonl (D_comp), pref_ablation.jsonl (ablation threshold), stats.json.
// `corpus_dir` holds a single period's items; `index_file` must already have
// the reports tombstoned.
Json MakeDatasetsStage(const DatasetConfig& config, std::uint64_t seed, const fs::path& corpus_dir,
                       const fs::path& reports_file, const fs::path& index_file, const fs::path& out);

// base.ckpt (pretrained on the history texts, or `base_ckpt` when given),
// adapter.ckpt, model.ckpt (adapter merged) and log.jsonl.
Json TrainSftStage(const PipelineConfig& config, std::uint64_t seed, const fs::path& corpus_dir,
                   const fs::path& sft_data, const fs::path& out, const fs::path& base_ckpt = {});

// adapter.ckpt against `init` (a merged SFT model, also the reference),
// model.ckpt and log.jsonl.
Json TrainDpoStage(const training::TrainConfig& config, datasets::PromptLanguage language, const fs::path& pref_data,
                   const fs::path& init, const fs::path& out);

// Extracts and scores queries for every method against the test snapshot:
// runs/<method>.json, metrics/<method>.json, comparison.json and
// comparison.txt. `models` maps method name to a merged checkpoint.
Json EvaluateStage(const PipelineConfig& config, const fs::path& corpus_dir, const fs::path& index_dir,
                   const std::map<std::string, fs::path>& models, const fs::path& out);

}  // namespace toxq::orchestration
