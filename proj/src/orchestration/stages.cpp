// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/orchestration/stages.hpp"

#include <algorithm>

#include "toxq/common/errors.hpp"
#include "toxq/common/hash.hpp"
#include "toxq/datasets/datasets.hpp"
#include "toxq/eval/extract.hpp"
#include "toxq/eval/metrics.hpp"
#include "toxq/lm/checkpoint.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::orchestration {

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr int kManifestSchema = 1;

std::map<std::string, std::string> HashTree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == kManifest) continue;
    files[rel] = Sha256File(entry.path());
  }
  return files;
}

std::string HashTable(const std::map<std::string, std::string>& files) {
  Sha256 h;
  for (const auto& [name, digest] : files) h.Update(name).Update("\n").Update(digest).Update("\n");
  return h.Hex();
}

bool Intact(const fs::path& dir, const std::string& inputs_hash) {
  const fs::path manifest = dir / kManifest;
  if (!fs::exists(manifest)) return false;
  try {
    const Json m = ReadJsonFile(manifest);
    if (m.at("schema").get<int>() != kManifestSchema) return false;
    if (m.at("inputs_hash").get<std::string>() != inputs_hash) return false;
    const auto recorded = m.at("outputs").get<std::map<std::string, std::string>>();
    return recorded == HashTree(dir);
  } catch (const std::exception&) {
    return false;
  }
}

Json PairToJson(const datasets::AnnotatedPair& p) {
  return Json{{"item_id", p.item_id}, {"category", p.category}, {"content", p.content},
              {"keyword", p.keyword}, {"hit", p.hit},           {"length", p.length}};
}

Json ConcatToJson(const datasets::ConcatSample& s) {
  return Json{{"group_id", s.group_id}, {"item_ids", s.item_ids}, {"content", s.content}, {"keywords", s.keywords}};
}

lm::Tokenizer BuildTokenizer(const corpus::Corpus& history) {
  std::vector<std::string> texts;
  texts.reserve(history.items.size() + 4);
  for (const auto& item : history.items) texts.push_back(item.text);
  for (auto lang : {datasets::PromptLanguage::kEnglish, datasets::PromptLanguage::kChinese}) {
    const auto& t = datasets::Template(lang);
    texts.push_back(t.Instruction() + t.output_prefix + ",");
  }
  return lm::Tokenizer::Build(texts);
}

std::vector<Json> LogLines(const std::vector<training::EpochLog>& logs) {
  std::vector<Json> lines;
  for (const auto& l : logs) lines.push_back(l.ToJson());
  return lines;
}

}  // namespace

StageOutcome RunStage(const std::string& stage, const fs::path& dir, const std::string& inputs_hash,
                      const std::function<Json()>& body) {
  StageOutcome out{stage, false, inputs_hash, "", Json::object()};
  if (Intact(dir, inputs_hash)) {
    const Json m = ReadJsonFile(dir / kManifest);
    out.skipped = true;
    out.outputs_hash = m.at("outputs_hash").get<std::string>();
    out.summary = m.value("summary", Json::object());
    return out;
  }
  try {
    fs::remove_all(dir);
    fs::create_directories(dir);
    out.summary = body();
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
  const auto files = HashTree(dir);
  out.outputs_hash = HashTable(files);
  WriteJsonFile(dir / kManifest, Json{{"schema", kManifestSchema},
                                      {"stage", stage},
                                      {"inputs_hash", inputs_hash},
                                      {"outputs", files},
                                      {"outputs_hash", out.outputs_hash},
                                      {"summary", out.summary}});
  return out;
}

std::string OutputsHash(const fs::path& dir) {
  try {
    return ReadJsonFile(dir / kManifest).at("outputs_hash").get<std::string>();
  } catch (const std::exception&) {
    return HashTable(HashTree(dir));
  }
}

Json GenCorpusStage(const PipelineConfig& config, std::uint64_t seed, const fs::path& out) {
  Json summary = Json::object();
  for (std::int64_t period : {0, 1}) {
    const corpus::Corpus c = corpus::GenerateCorpus(config.CorpusFor(seed, period));
    const std::string name = period == 0 ? "history" : "test";
    const auto n = period == 0 ? config.datasets.history_reports : config.eval.test_reports;
    // Test reports use their own stream so they do not mirror the history draw.
    const auto reports = corpus::SampleReports(c, n, seed + static_cast<std::uint64_t>(period) * 1000);
    corpus::WriteCorpus(c, (out / name).string());
    corpus::WriteReports(reports, (out / (name + "_reports.jsonl")).string());
    summary[name] = {{"items", c.items.size()}, {"toxic", c.ToxicCount()}, {"reports", reports.size()}};
  }
  return summary;
}

Json BuildIndexStage(const fs::path& corpus_dir, const fs::path& out) {
  const corpus::Corpus history = corpus::ReadCorpus((corpus_dir / "history").string());
  const corpus::Corpus test = corpus::ReadCorpus((corpus_dir / "test").string());
  const searchsim::RiskScorer scorer = searchsim::RiskScorer::Fit(history.items);
  WriteJsonFile(out / "scorer.json", scorer.ToJson());
  Json summary{{"scorer_weights", scorer.size()}};
  for (const auto& [name, c] : {std::pair<std::string, const corpus::Corpus*>{"history", &history}, {"test", &test}}) {
    auto index = searchsim::InvertedIndex::Build(*c, scorer);
    const auto reports = corpus::ReadReports((corpus_dir / (name + "_reports.jsonl")).string());
    for (const auto& r : reports) index.Remove(r.item_id);
    index.Save((out / (name + ".index")).string());
    summary[name] = {{"documents", index.core().docs.size()}, {"version", index.version()}};
  }
  return summary;
}

Json MakeDatasetsStage(const DatasetConfig& config, std::uint64_t seed, const fs::path& corpus_dir,
                       const fs::path& reports_file, const fs::path& index_file, const fs::path& out) {
  const corpus::Corpus history = corpus::ReadCorpus(corpus_dir.string());
  const auto reports = corpus::ReadReports(reports_file.string());
  const auto index = searchsim::InvertedIndex::Load(index_file.string());
  const auto view = index.Snapshot();

  const auto decisions = datasets::ScoreAnnotations(reports, history, view);
  std::vector<datasets::AnnotatedPair> pairs;
  std::vector<Json> pair_lines;
  for (const auto& d : decisions) {
    if (!d.admitted) continue;
    pairs.push_back(d.pair);
    pair_lines.push_back(PairToJson(d.pair));
  }
  WriteJsonLines(out / "pairs.jsonl", pair_lines);

  const auto groups = datasets::ClusterGroups(pairs, config.similarity);
  const auto max_members = static_cast<std::size_t>(config.max_members);
  const auto concat = datasets::BuildConcatDataset(groups, max_members, seed);
  std::vector<Json> concat_lines;
  for (const auto& s : concat) concat_lines.push_back(ConcatToJson(s));
  WriteJsonLines(out / "concat.jsonl", concat_lines);

  std::vector<datasets::SftRecord> sft;
  for (const auto& p : pairs) sft.push_back(datasets::RenderSft(p, config.language));
  for (const auto& s : concat) sft.push_back(datasets::RenderSft(s, config.language));
  datasets::WriteSftJsonl((out / "sft.jsonl").string(), sft);

  Json summary{{"candidates", decisions.size()},
               {"D", pairs.size()},
               {"D_cat", concat.size()},
               {"sft_records", sft.size()},
               {"groups", groups.size()}};
  for (const auto& [name, threshold] :
       {std::pair<std::string, double>{"pref", config.threshold}, {"pref_ablation", config.ablation_threshold}}) {
    const auto triples = datasets::BuildPreferenceDataset(groups, view, threshold, max_members, seed);
    std::vector<datasets::PreferenceRecord> records;
    for (const auto& t : triples) records.push_back(datasets::RenderPreference(t, config.language));
    datasets::WritePreferenceJsonl((out / (name + ".jsonl")).string(), records);
    summary[name] = {{"threshold", threshold}, {"triples", records.size()}};
  }
  WriteJsonFile(out / "stats.json", summary);
  return summary;
}

Json TrainSftStage(const PipelineConfig& config, std::uint64_t seed, const fs::path& corpus_dir,
                   const fs::path& sft_data, const fs::path& out, const fs::path& base_ckpt) {
  const auto records = datasets::ReadSftJsonl(sft_data.string());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      datasets::ParseSft(records[i], config.datasets.language);
    } catch (const ValidationError& e) {
      throw ValidationError(sft_data.string() + " record " + std::to_string(i) + ": " + e.what());
    }
  }
  training::TrainConfig tc = config.sft;
  tc.seed = seed;
  std::vector<Json> log;
  auto on_epoch = [&](const training::EpochLog& l) { log.push_back(l.ToJson()); };

  lm::BaseCheckpoint base;
  if (!base_ckpt.empty()) {
    base = lm::LoadBase(base_ckpt.string());
  } else {
    const corpus::Corpus history = corpus::ReadCorpus((corpus_dir / "history").string());
    base.tokenizer = BuildTokenizer(history);
    lm::ModelConfig mc = config.model;
    mc.vocab_size = static_cast<std::int64_t>(base.tokenizer.size());
    base.params = lm::ModelParams::Init(mc, seed);
    std::vector<std::vector<lm::TokenId>> texts;
    texts.reserve(history.items.size());
    for (const auto& item : history.items) texts.push_back(base.tokenizer.Encode(item.text));
    training::TrainConfig pc = tc;
    pc.learning_rate = config.pretrain.learning_rate;
    pc.batch_size = config.pretrain.batch_size;
    training::Pretrain(base.params, texts, config.pretrain.epochs, pc, on_epoch);
  }
  lm::SaveBase((out / "base.ckpt").string(), base.params, base.tokenizer, Json{{"stage", "pretrain"}, {"seed", seed}});

  std::vector<training::SftExample> examples;
  examples.reserve(records.size());
  for (const auto& r : records) examples.push_back(training::Encode(base.tokenizer, r));
  const auto result = training::TrainSft(base.params, examples, tc, on_epoch);
  lm::SaveAdapter((out / "adapter.ckpt").string(), result.adapter, base.params,
                  Json{{"stage", "sft"}, {"train", tc.ToJson()}});
  lm::SaveBase((out / "model.ckpt").string(), lm::MergeAdapter(base.params, result.adapter), base.tokenizer,
               Json{{"stage", "sft"}, {"train", tc.ToJson()}});
  WriteJsonLines(out / "log.jsonl", log);
  return Json{{"records", records.size()},
              {"final_loss", result.logs.empty() ? 0.0 : result.logs.back().loss},
              {"adapter_params", result.adapter.ParamCount()}};
}

Json TrainDpoStage(const training::TrainConfig& config, datasets::PromptLanguage language, const fs::path& pref_data,
                   const fs::path& init, const fs::path& out) {
  const auto records = datasets::ReadPreferenceJsonl(pref_data.string());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      datasets::ParsePreference(records[i], language);
    } catch (const ValidationError& e) {
      throw ValidationError(pref_data.string() + " record " + std::to_string(i) + ": " + e.what());
    }
  }
  const lm::BaseCheckpoint ref = lm::LoadBase(init.string());
  std::vector<training::PreferenceExample> examples;
  for (const auto& r : records) examples.push_back(training::Encode(ref.tokenizer, r));
  std::vector<Json> log;
  const auto result =
      training::TrainDpo(ref.params, examples, config, [&](const training::EpochLog& l) { log.push_back(l.ToJson()); });
  lm::SaveAdapter((out / "adapter.ckpt").string(), result.adapter, ref.params,
                  Json{{"stage", "dpo"}, {"train", config.ToJson()}});
  lm::SaveBase((out / "model.ckpt").string(), lm::MergeAdapter(ref.params, result.adapter), ref.tokenizer,
               Json{{"stage", "dpo"}, {"train", config.ToJson()}});
  WriteJsonLines(out / "log.jsonl", log);
  Json margins = Json::array();
  for (const auto& l : result.logs) margins.push_back(l.margin);
  return Json{{"records", records.size()}, {"margins", margins}};
}

Json EvaluateStage(const PipelineConfig& config, const fs::path& corpus_dir, const fs::path& index_dir,
                   const std::map<std::string, fs::path>& models, const fs::path& out) {
  const corpus::Corpus test = corpus::ReadCorpus((corpus_dir / "test").string());
  const auto reports = corpus::ReadReports((corpus_dir / "test_reports.jsonl").string());
  const auto index = searchsim::InvertedIndex::Load((index_dir / "test.index").string());
  const auto snapshot = index.Snapshot();
  const auto version = snapshot.version();

  std::vector<eval::QueryRun> runs;
  runs.push_back(eval::ExtractHuman(reports, version));
  runs.push_back(eval::ExtractTfIdf(test, reports, static_cast<std::size_t>(config.eval.tfidf_top_n), version));
  for (const auto& [method, path] : models) {
    const lm::BaseCheckpoint ckpt = lm::LoadBase(path.string());
    eval::ModelExtractor ex{&ckpt.params, &ckpt.tokenizer, config.datasets.language, {}};
    ex.generation.max_new_tokens = config.eval.max_new_tokens;
    runs.push_back(eval::ExtractModel(ex, test, reports, version, method));
  }
  fs::create_directories(out / "runs");
  fs::create_directories(out / "metrics");
  std::vector<eval::MetricsReport> metrics;
  for (const auto& run : runs) {
    eval::WriteQueryRun((out / "runs" / (run.method + ".json")).string(), run);
    metrics.push_back(eval::Evaluate(run, snapshot));
    WriteJsonFile(out / "metrics" / (run.method + ".json"), metrics.back().ToJson());
  }
  const std::string baseline = models.contains("sft") ? "sft" : "";
  const eval::Comparison cmp = eval::CompareRuns(metrics, baseline);
  WriteJsonFile(out / "comparison.json", cmp.ToJson());
  WriteTextFile(out / "comparison.txt", cmp.ToText());
  return cmp.ToJson();
}

}  // namespace toxq::orchestration
