// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// toxq command line: one subcommand per pipeline stage, plus the full
// pipeline and the review service.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toxq/common/errors.hpp"
#include "toxq/common/jsonl.hpp"
#include "toxq/eval/extract.hpp"
#include "toxq/eval/metrics.hpp"
#include "toxq/lm/checkpoint.hpp"
#include "toxq/orchestration/pipeline.hpp"
#include "toxq/orchestration/service.hpp"
#include "toxq/searchsim/index.hpp"

namespace {

using namespace toxq;
namespace orch = toxq::orchestration;
namespace fs = std::filesystem;

fs::path OutOrDefault(const std::string& out, const orch::PipelineConfig& config, const char* stage) {
  return out.empty() ? fs::path(config.out_dir) / stage : fs::path(out);
}

void PrintSummary(const std::string& stage, const Json& summary, const fs::path& out) {
  std::cout << stage << " -> " << out.string() << "\n" << summary.dump(2) << "\n";
}

Json RunInto(const std::string& stage, const fs::path& out, const std::function<Json()>& body) {
  fs::create_directories(out);
  try {
    return body();
  } catch (const std::exception& e) {
    throw orch::StageError(stage, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxq: query exploration for toxic content auditing"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::uint64_t seed = 1;

  auto* gen = app.add_subcommand("gen-corpus", "Generate the history and test corpora with their reports");
  gen->add_option("--config", config_path, "Pipeline config (JSON)");
  gen->add_option("--out", out, "Output directory");
  gen->add_option("--seed", seed, "Corpus seed");

  std::string corpus_dir;
  auto* build = app.add_subcommand("build-index", "Fit the risk scorer and build both search indexes");
  build->add_option("--corpus", corpus_dir, "gen-corpus output directory")->required();
  build->add_option("--out", out, "Output directory");

  std::string reports_path, index_path;
  double threshold = -1;
  auto* make = app.add_subcommand("make-datasets", "Build D, D_cat and the preference sets from reports");
  make->add_option("--corpus", corpus_dir, "Corpus directory holding the reported items")->required();
  make->add_option("--reports", reports_path, "Reports (JSON lines)")->required();
  make->add_option("--index", index_path, "Index file with the reports removed")->required();
  make->add_option("--threshold", threshold, "toxic_rate threshold for preferred queries");
  make->add_option("--config", config_path, "Pipeline config (JSON)");
  make->add_option("--seed", seed, "Sampling seed");
  make->add_option("--out", out, "Output directory");

  std::string data_path, init_path, base_path;
  auto* sft = app.add_subcommand("train-sft", "Pretrain the base model and fine-tune a LoRA adapter");
  sft->add_option("--data", data_path, "sft.jsonl")->required();
  sft->add_option("--corpus", corpus_dir, "gen-corpus output directory (tokenizer and pretraining text)");
  sft->add_option("--base", base_path, "Start from this base checkpoint instead of pretraining");
  sft->add_option("--config", config_path, "Pipeline config (JSON)");
  sft->add_option("--seed", seed, "Training seed");
  sft->add_option("--out", out, "Output directory");

  auto* dpo = app.add_subcommand("train-dpo", "Align a merged SFT checkpoint on preference triples");
  dpo->add_option("--data", data_path, "pref.jsonl")->required();
  dpo->add_option("--init", init_path, "Merged SFT checkpoint (model.ckpt)")->required();
  dpo->add_option("--config", config_path, "Pipeline config (JSON)");
  dpo->add_option("--seed", seed, "Training seed");
  dpo->add_option("--out", out, "Output directory");

  std::string method = "human", name, model_path;
  std::size_t top_n = 1;
  auto* extract = app.add_subcommand("extract", "Produce a query run for a set of reports");
  extract->add_option("--method", method, "human | tfidf | model")
      ->check(CLI::IsMember({"human", "tfidf", "model"}));
  extract->add_option("--corpus", corpus_dir, "Corpus directory holding the reported items")->required();
  extract->add_option("--reports", reports_path, "Reports (JSON lines)")->required();
  extract->add_option("--index", index_path, "Index file (fixes the snapshot version)")->required();
  extract->add_option("--model", model_path, "Merged checkpoint for --method model");
  extract->add_option("--name", name, "Method name recorded in the run");
  extract->add_option("--top-n", top_n, "TF-IDF terms per report");
  extract->add_option("--config", config_path, "Pipeline config (JSON)");
  extract->add_option("--out", out, "Output run file")->required();

  std::string run_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score a query run against an index snapshot");
  evaluate->add_option("--run", run_path, "Query run (JSON)")->required();
  evaluate->add_option("--index", index_path, "Index file")->required();
  evaluate->add_option("--out", out, "metrics.json")->required();

  std::vector<std::string> metric_files;
  std::string baseline;
  auto* compare = app.add_subcommand("compare", "Tabulate metrics files against a baseline");
  compare->add_option("metrics", metric_files, "metrics.json files")->required();
  compare->add_option("--baseline", baseline, "Baseline method (default: first file)");
  compare->add_option("--out", out, "Write comparison JSON here (text goes to stdout)");

  auto* pipeline = app.add_subcommand("run-pipeline", "Run every stage for every seed, resuming where possible");
  pipeline->add_option("--config", config_path, "Pipeline config (JSON)");

  std::string host = "127.0.0.1", event_log;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the review API over HTTP");
  serve->add_option("--corpus", corpus_dir, "Corpus directory holding the reported items")->required();
  serve->add_option("--reports", reports_path, "Reports (JSON lines)")->required();
  serve->add_option("--index", index_path, "Live index file")->required();
  serve->add_option("--model", model_path, "Merged checkpoint for suggestions");
  serve->add_option("--event-log", event_log, "Append session events here");
  serve->add_option("--config", config_path, "Pipeline config (JSON)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (overridden by TOXQ_PORT)");

  CLI11_PARSE(app, argc, argv);

  try {
    const orch::PipelineConfig config = orch::PipelineConfig::Load(config_path);
    if (*gen) {
      const fs::path dir = OutOrDefault(out, config, "corpus");
      PrintSummary("gen-corpus", RunInto("gen-corpus", dir, [&] { return orch::GenCorpusStage(config, seed, dir); }),
                   dir);
    } else if (*build) {
      const fs::path dir = OutOrDefault(out, config, "index");
      PrintSummary("build-index", RunInto("build-index", dir, [&] { return orch::BuildIndexStage(corpus_dir, dir); }),
                   dir);
    } else if (*make) {
      orch::DatasetConfig dc = config.datasets;
      if (threshold >= 0) dc.threshold = threshold;
      const fs::path dir = OutOrDefault(out, config, "datasets");
      PrintSummary("make-datasets", RunInto("make-datasets", dir, [&] {
                     return orch::MakeDatasetsStage(dc, seed, corpus_dir, reports_path, index_path, dir);
                   }),
                   dir);
    } else if (*sft) {
      if (corpus_dir.empty() && base_path.empty()) throw ConfigError("train-sft needs --corpus or --base");
      const fs::path dir = OutOrDefault(out, config, "sft");
      PrintSummary("train-sft", RunInto("train-sft", dir, [&] {
                     return orch::TrainSftStage(config, seed, corpus_dir, data_path, dir, base_path);
                   }),
                   dir);
    } else if (*dpo) {
      training::TrainConfig tc = config.dpo;
      tc.seed = seed;
      const fs::path dir = OutOrDefault(out, config, "dpo");
      PrintSummary("train-dpo", RunInto("train-dpo", dir, [&] {
                     return orch::TrainDpoStage(tc, config.datasets.language, data_path, init_path, dir);
                   }),
                   dir);
    } else if (*extract) {
      const auto corpus = corpus::ReadCorpus(corpus_dir);
      const auto reports = corpus::ReadReports(reports_path);
      const auto version = searchsim::InvertedIndex::Load(index_path).version();
      eval::QueryRun run;
      if (method == "human") {
        run = eval::ExtractHuman(reports, version);
      } else if (method == "tfidf") {
        run = eval::ExtractTfIdf(corpus, reports, top_n, version);
      } else {
        if (model_path.empty()) throw ConfigError("--method model needs --model");
        const auto ckpt = lm::LoadBase(model_path);
        eval::ModelExtractor ex{&ckpt.params, &ckpt.tokenizer, config.datasets.language, {}};
        ex.generation.max_new_tokens = config.eval.max_new_tokens;
        run = eval::ExtractModel(ex, corpus, reports, version, "model");
      }
      if (!name.empty()) run.method = name;
      eval::WriteQueryRun(out, run);
      std::cout << "wrote " << run.reports.size() << " reports to " << out << "\n";
    } else if (*evaluate) {
      const auto run = eval::ReadQueryRun(run_path);
      const auto index = searchsim::InvertedIndex::Load(index_path);
      const auto report = eval::Evaluate(run, index.Snapshot());
      WriteJsonFile(out, report.ToJson());
      std::printf("%s: %lld/%lld effective queries, Query Hit Rate %.4f, hit@100 %lld\n", report.method.c_str(),
                  static_cast<long long>(report.n_effective), static_cast<long long>(report.n_queries),
                  report.query_hit_rate, static_cast<long long>(report.hits_at_100));
    } else if (*compare) {
      std::vector<eval::MetricsReport> reports;
      for (const auto& f : metric_files) reports.push_back(eval::MetricsReport::FromJson(ReadJsonFile(f)));
      const auto cmp = eval::CompareRuns(reports, baseline);
      if (!out.empty()) WriteJsonFile(out, cmp.ToJson());
      std::cout << cmp.ToText();
    } else if (*pipeline) {
      const auto result =
          orch::RunPipeline(config, [](const std::string& line) { std::cerr << line << std::endl; });
      std::cout << result.aggregate_text;
    } else if (*serve) {
      orch::ServiceOptions options;
      options.corpus_dir = corpus_dir;
      options.reports = reports_path;
      options.index = index_path;
      options.model = model_path;
      options.event_log = event_log;
      options.language = config.datasets.language;
      options.max_new_tokens = config.eval.max_new_tokens;
      options.export_threshold = config.datasets.threshold;
      orch::ExplorationService service(options);
      port = orch::PortFromEnv(port);
      std::cerr << "listening on " << host << ":" << port << std::endl;
      orch::Serve(service, host, port);
    }
  } catch (const orch::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
