// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "toxq/common/errors.hpp"
#include "toxq/orchestration/pipeline.hpp"

using namespace toxq;
using namespace toxq::orchestration;

namespace {

const std::vector<std::string> kStageDirs{"corpus", "index", "datasets", "sft", "dpo", "eval"};

PipelineConfig TinyConfig(const fs::path& out) {
  PipelineConfig c = PipelineConfig::FromJson(Json{
      {"corpus", {{"n_items", 1200}, {"n_campaigns", 12}}},
      {"datasets", {{"history_reports", 40}}},
      {"model", {{"n_layers", 1}, {"d_model", 16}, {"n_heads", 2}, {"context_length", 96}}},
      {"pretrain", {{"epochs", 1}}},
      {"sft", {{"sft_epochs", 1}, {"cutoff", 96}}},
      {"dpo", {{"dpo_epochs", 2}, {"cutoff", 96}}},
      {"eval", {{"test_reports", 20}, {"max_new_tokens", 16}}},
      {"seeds", {7}},
      {"out_dir", out.string()},
  });
  return c;
}

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("toxq_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> Hashes(const PipelineResult& r) {
  std::vector<std::string> out;
  for (const auto& s : r.seeds) {
    for (const auto& st : s.stages) out.push_back(st.stage + ":" + st.outputs_hash);
  }
  return out;
}

}  // namespace

TEST_CASE("tiny pipeline: complete, resumable, reproducible") {
  const fs::path a = Scratch("a");
  const auto first = RunPipeline(TinyConfig(a));
  REQUIRE(first.seeds.size() == 1);
  const auto& seed = first.seeds[0];
  REQUIRE(seed.stages.size() == kStageDirs.size());
  for (const auto& d : kStageDirs) {
    CHECK(fs::exists(seed.dir / d / "manifest.json"));
  }
  for (const auto& st : seed.stages) CHECK(!st.skipped);
  CHECK(fs::exists(a / "aggregate.json"));
  CHECK(fs::exists(seed.dir / "eval" / "comparison.txt"));
  for (const char* m : {kHuman, kTfIdf, kSftOnly, kQExplorer, kQExplorerAblation}) {
    const double q = seed.QueryHitRate(m);
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
  }
  CHECK(seed.dpo_margins.size() == 2);
  CHECK_THROWS_AS(seed.QueryHitRate("nobody"), NotFoundError);

  SUBCASE("a rerun skips every stage") {
    const auto again = RunPipeline(TinyConfig(a));
    for (const auto& st : again.seeds[0].stages) CHECK(st.skipped);
    CHECK(Hashes(again) == Hashes(first));
    CHECK(again.aggregate == first.aggregate);
  }
  SUBCASE("a damaged output reruns its stage with the same result") {
    const fs::path victim = seed.dir / "eval" / "comparison.txt";
    std::ofstream(victim, std::ios::app) << "x";
    const auto again = RunPipeline(TinyConfig(a));
    const auto& st = again.seeds[0].stages;
    for (std::size_t i = 0; i + 1 < st.size(); ++i) CHECK(st[i].skipped);
    CHECK(!st.back().skipped);
    CHECK(Hashes(again) == Hashes(first));
  }
  SUBCASE("a fresh directory reproduces every stage bit for bit") {
    const fs::path b = Scratch("b");
    const auto fresh = RunPipeline(TinyConfig(b));
    CHECK(Hashes(fresh) == Hashes(first));
    fs::remove_all(b);
  }
  SUBCASE("a changed setting reruns from the affected stage on") {
    auto cfg = TinyConfig(a);
    cfg.dpo.beta = 0.2;
    const auto again = RunPipeline(cfg);
    const auto& st = again.seeds[0].stages;
    for (std::size_t i = 0; i < 4; ++i) CHECK(st[i].skipped);
    CHECK(!st[4].skipped);
    CHECK(!st[5].skipped);
  }
}

TEST_CASE("stage failures name the stage") {
  const fs::path d = Scratch("fail");
  try {
    RunStage("train-dpo", d / "dpo", "h", [&]() -> Json {
      TrainDpoStage(training::TrainConfig{}, datasets::PromptLanguage::kChinese, d / "missing.jsonl",
                    d / "missing.ckpt", d / "dpo");
      return Json::object();
    });
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "train-dpo");
    CHECK(std::string(e.what()).find("train-dpo") != std::string::npos);
  }
  CHECK(!fs::exists(d / "dpo" / "manifest.json"));
  fs::remove_all(d);
}

TEST_CASE("configuration") {
  const PipelineConfig def;
  CHECK_NOTHROW(def.Validate());
  CHECK(def.seeds.size() == 5);
  CHECK(PipelineConfig::FromJson(def.ToJson()).ToJson() == def.ToJson());
  CHECK_THROWS_AS(PipelineConfig::FromJson(Json{{"datasets", {{"threshold", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::FromJson(Json{{"seeds", Json::array()}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::FromJson(Json{{"model", {{"d_model", 30}, {"n_heads", 4}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::FromJson(Json{{"eval", {{"test_reports", 1000000}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::FromJson(Json{{"datasets", {{"language", "fr"}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::Load("/nonexistent/config.json"), ConfigError);

  ::setenv(kOutDirEnv, "/tmp/toxq_env_out", 1);
  CHECK(PipelineConfig::Load("").out_dir == "/tmp/toxq_env_out");
  ::unsetenv(kOutDirEnv);
  ::setenv(kPortEnv, "9123", 1);
  CHECK(PortFromEnv(80) == 9123);
  ::setenv(kPortEnv, "http", 1);
  CHECK_THROWS_AS(PortFromEnv(80), ConfigError);
  ::unsetenv(kPortEnv);
  CHECK(PortFromEnv(80) == 80);
}
