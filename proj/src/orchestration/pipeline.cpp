// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/orchestration/pipeline.hpp"

#include <cstdio>

#include "toxq/common/errors.hpp"
#include "toxq/common/hash.hpp"

namespace toxq::orchestration {

namespace {

std::string InputsHash(const std::string& stage, const Json& params, const std::vector<std::string>& upstream) {
  Sha256 h;
  h.Update(stage).Update("\n").Update(params.dump()).Update("\n");
  for (const auto& u : upstream) h.Update(u).Update("\n");
  return h.Hex();
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> Margins(const Json& summary) {
  std::vector<double> out;
  for (const auto& m : summary.value("margins", Json::array())) out.push_back(m.get<double>());
  return out;
}

std::string Fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

SeedRun RunSeed(const PipelineConfig& config, std::uint64_t seed, const Progress& progress) {
  SeedRun run;
  run.seed = seed;
  run.dir = fs::path(config.out_dir) / ("seed-" + std::to_string(seed));
  const Json cfg = config.ToJson();
  auto stage = [&](const std::string& name, const std::string& sub, const Json& params,
                   const std::vector<std::string>& upstream, const std::function<Json(const fs::path&)>& body) {
    const fs::path dir = run.dir / sub;
    if (progress) progress("seed " + std::to_string(seed) + ": " + name);
    run.stages.push_back(
        RunStage(name, dir, InputsHash(name, params, upstream), [&] { return body(dir); }));
    if (progress && run.stages.back().skipped) progress("seed " + std::to_string(seed) + ": " + name + " up to date");
    return run.stages.back();
  };
  const Json seed_json = seed;

  const auto corpus = stage("gen-corpus", "corpus",
                            Json{{"seed", seed_json}, {"corpus", cfg["corpus"]},
                                 {"history_reports", config.datasets.history_reports},
                                 {"test_reports", config.eval.test_reports}},
                            {}, [&](const fs::path& out) { return GenCorpusStage(config, seed, out); });
  const fs::path corpus_dir = run.dir / "corpus";

  const auto index = stage("build-index", "index", Json::object(), {corpus.outputs_hash},
                           [&](const fs::path& out) { return BuildIndexStage(corpus_dir, out); });
  const fs::path index_dir = run.dir / "index";

  const auto data = stage("make-datasets", "datasets", Json{{"seed", seed_json}, {"datasets", cfg["datasets"]}},
                          {corpus.outputs_hash, index.outputs_hash}, [&](const fs::path& out) {
                            return MakeDatasetsStage(config.datasets, seed, corpus_dir / "history",
                                                     corpus_dir / "history_reports.jsonl",
                                                     index_dir / "history.index", out);
                          });
  const fs::path data_dir = run.dir / "datasets";
  run.datasets = data.summary;

  const auto sft = stage("train-sft", "sft",
                         Json{{"seed", seed_json}, {"model", cfg["model"]}, {"pretrain", cfg["pretrain"]},
                              {"sft", cfg["sft"]}, {"language", cfg["datasets"]["language"]}},
                         {corpus.outputs_hash, data.outputs_hash}, [&](const fs::path& out) {
                           return TrainSftStage(config, seed, corpus_dir, data_dir / "sft.jsonl", out);
                         });
  const fs::path sft_dir = run.dir / "sft";

  const auto dpo = stage(
      "train-dpo", "dpo", Json{{"seed", seed_json}, {"dpo", cfg["dpo"]}, {"language", cfg["datasets"]["language"]}},
      {sft.outputs_hash, data.outputs_hash}, [&](const fs::path& out) {
        training::TrainConfig tc = config.dpo;
        tc.seed = seed;
        Json summary;
        summary["comp"] = TrainDpoStage(tc, config.datasets.language, data_dir / "pref.jsonl",
                                        sft_dir / "model.ckpt", out / "comp");
        fs::create_directories(out / "comp2");
        summary["comp2"] = TrainDpoStage(tc, config.datasets.language, data_dir / "pref_ablation.jsonl",
                                         sft_dir / "model.ckpt", out / "comp2");
        return summary;
      });
  const fs::path dpo_dir = run.dir / "dpo";
  run.dpo_margins = Margins(dpo.summary["comp"]);
  run.ablation_margins = Margins(dpo.summary["comp2"]);

  const auto ev = stage("evaluate", "eval", Json{{"eval", cfg["eval"]}, {"language", cfg["datasets"]["language"]}},
                        {corpus.outputs_hash, index.outputs_hash, sft.outputs_hash, dpo.outputs_hash},
                        [&](const fs::path& out) {
                          return EvaluateStage(config, corpus_dir, index_dir,
                                               {{kSftOnly, sft_dir / "model.ckpt"},
                                                {kQExplorer, dpo_dir / "comp" / "model.ckpt"},
                                                {kQExplorerAblation, dpo_dir / "comp2" / "model.ckpt"}},
                                               out);
                        });
  run.comparison = ev.summary;
  return run;
}

}  // namespace

double SeedRun::QueryHitRate(const std::string& method) const {
  for (const auto& row : comparison.value("rows", Json::array())) {
    if (row.at("method").get<std::string>() == method) return row.at("query_hit_rate").get<double>();
  }
  throw NotFoundError("no results for method '" + method + "' in seed " + std::to_string(seed));
}

PipelineResult RunPipeline(const PipelineConfig& config, const Progress& progress) {
  config.Validate();
  fs::create_directories(config.out_dir);
  WriteJsonFile(fs::path(config.out_dir) / "config.json", config.ToJson());
  PipelineResult result;
  for (auto seed : config.seeds) result.seeds.push_back(RunSeed(config, seed, progress));

  const std::vector<std::string> methods{kHuman, kTfIdf, kSftOnly, kQExplorer, kQExplorerAblation};
  Json agg{{"seeds", config.seeds}};
  std::string text = "Query Hit Rate per seed\nmethod";
  for (auto seed : config.seeds) text += "\tseed " + std::to_string(seed);
  text += "\tmean\n";
  for (const auto& m : methods) {
    std::vector<double> rates;
    Json rows = Json::array();
    for (const auto& s : result.seeds) {
      rates.push_back(s.QueryHitRate(m));
      for (const auto& row : s.comparison["rows"]) {
        if (row["method"] == m) rows.push_back(row);
      }
    }
    agg["methods"][m] = {{"query_hit_rate", rates}, {"mean_query_hit_rate", Mean(rates)}, {"rows", rows}};
    text += m;
    for (double r : rates) text += "\t" + Fixed(r, 3);
    text += "\t" + Fixed(Mean(rates), 3) + "\n";
  }
  const double sft = agg["methods"][kSftOnly]["mean_query_hit_rate"].get<double>();
  const double qx = agg["methods"][kQExplorer]["mean_query_hit_rate"].get<double>();
  agg["relative_delta_vs_sft"] = sft > 0 ? Json((qx - sft) / sft) : Json(nullptr);

  for (const auto& [key, pick] :
       {std::pair<std::string, std::vector<double> SeedRun::*>{"dpo_margins", &SeedRun::dpo_margins},
        {"ablation_margins", &SeedRun::ablation_margins}}) {
    Json per_seed = Json::array();
    std::vector<double> mean;
    for (const auto& s : result.seeds) {
      const auto& v = s.*pick;
      per_seed.push_back(v);
      if (mean.size() < v.size()) mean.resize(v.size(), 0.0);
      for (std::size_t e = 0; e < v.size(); ++e) mean[e] += v[e] / static_cast<double>(result.seeds.size());
    }
    agg[key] = {{"per_seed", per_seed}, {"mean", mean}};
  }
  text += "\nmean DPO margin per epoch:";
  for (double m : agg["dpo_margins"]["mean"]) text += " " + Fixed(m, 4);
  text += "\n\ndataset sizes per seed (D, D_cat, D_comp, D_comp2):\n";
  for (const auto& s : result.seeds) {
    agg["datasets"].push_back(s.datasets);
    text += "seed " + std::to_string(s.seed) + ": " + s.datasets["D"].dump() + ", " + s.datasets["D_cat"].dump() +
            ", " + s.datasets["pref"]["triples"].dump() + ", " + s.datasets["pref_ablation"]["triples"].dump() + "\n";
  }
  WriteJsonFile(fs::path(config.out_dir) / "aggregate.json", agg);
  WriteTextFile(fs::path(config.out_dir) / "aggregate.txt", text);
  result.aggregate = std::move(agg);
  result.aggregate_text = std::move(text);
  return result;
}

}  // namespace toxq::orchestration
