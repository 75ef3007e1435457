// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/orchestration/config.hpp"

#include <cstdlib>

#include "toxq/common/errors.hpp"

namespace toxq::orchestration {

namespace {

template <typename T>
void Read(const Json& j, const char* key, T& field, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

const Json& Section(const Json& j, const char* key) {
  static const Json kEmpty = Json::object();
  if (!j.contains(key)) return kEmpty;
  if (!j.at(key).is_object()) throw ConfigError(std::string(key) + " must be an object");
  return j.at(key);
}

}  // namespace

PipelineConfig::PipelineConfig() {
  corpus.n_campaigns = 60;
  model.n_layers = 2;
  model.d_model = 64;
  model.n_heads = 4;
  model.context_length = 192;
  sft.learning_rate = 3e-3;
  sft.sft_epochs = 30;
  sft.batch_size = 8;
  sft.cutoff = 192;
  dpo = sft;
  dpo.learning_rate = 1e-3;
  dpo.batch_size = 4;
}

void PipelineConfig::Validate() const {
  corpus.Validate();
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (datasets.history_reports < 1) throw ConfigError("datasets.history_reports must be >= 1");
  if (!(datasets.similarity > 0 && datasets.similarity <= 1)) throw ConfigError("datasets.similarity must be in (0, 1]");
  if (datasets.max_members < 1) throw ConfigError("datasets.max_members must be >= 1");
  if (!(datasets.threshold >= 0 && datasets.threshold < 1)) throw ConfigError("datasets.threshold must be in [0, 1)");
  if (!(datasets.ablation_threshold >= 0 && datasets.ablation_threshold < 1)) {
    throw ConfigError("datasets.ablation_threshold must be in [0, 1)");
  }
  if (pretrain.epochs < 0) throw ConfigError("pretrain.epochs must be >= 0");
  if (!(pretrain.learning_rate > 0)) throw ConfigError("pretrain.learning_rate must be > 0");
  if (pretrain.batch_size < 1) throw ConfigError("pretrain.batch_size must be >= 1");
  if (eval.test_reports < 1) throw ConfigError("eval.test_reports must be >= 1");
  if (eval.tfidf_top_n < 1) throw ConfigError("eval.tfidf_top_n must be >= 1");
  if (eval.max_new_tokens < 1) throw ConfigError("eval.max_new_tokens must be >= 1");
  lm::ModelConfig m = model;
  m.vocab_size = 5;
  m.Validate();
  sft.Validate();
  dpo.Validate();
  for (auto period : {0, 1}) {
    const auto toxic = CorpusFor(seeds.front(), period).ToxicCount();
    const auto wanted = period == 0 ? datasets.history_reports : eval.test_reports;
    if (wanted > toxic) {
      throw ConfigError("corpus has " + std::to_string(toxic) + " toxic items per period but " +
                        std::to_string(wanted) + " reports were requested");
    }
  }
}

Json PipelineConfig::ToJson() const {
  Json m = model.ToJson();
  m.erase("vocab_size");
  Json c = corpus::ToJson(corpus);
  c.erase("seed");
  c.erase("period");
  return Json{
      {"corpus", c},
      {"datasets",
       {{"history_reports", datasets.history_reports},
        {"similarity", datasets.similarity},
        {"max_members", datasets.max_members},
        {"threshold", datasets.threshold},
        {"ablation_threshold", datasets.ablation_threshold},
        {"language", datasets::PromptLanguageName(datasets.language)}}},
      {"model", m},
      {"pretrain",
       {{"epochs", pretrain.epochs}, {"learning_rate", pretrain.learning_rate}, {"batch_size", pretrain.batch_size}}},
      {"sft", sft.ToJson()},
      {"dpo", dpo.ToJson()},
      {"eval",
       {{"test_reports", eval.test_reports},
        {"tfidf_top_n", eval.tfidf_top_n},
        {"max_new_tokens", eval.max_new_tokens}}},
      {"seeds", seeds},
      {"out_dir", out_dir},
  };
}

PipelineConfig PipelineConfig::FromJson(const Json& j) {
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  PipelineConfig c;
  {
    Json merged = corpus::ToJson(c.corpus);
    for (const auto& [k, v] : Section(j, "corpus").items()) merged[k] = v;
    c.corpus = corpus::CorpusConfigFromJson(merged);
  }
  const Json& d = Section(j, "datasets");
  Read(d, "history_reports", c.datasets.history_reports, "datasets");
  Read(d, "similarity", c.datasets.similarity, "datasets");
  Read(d, "max_members", c.datasets.max_members, "datasets");
  Read(d, "threshold", c.datasets.threshold, "datasets");
  Read(d, "ablation_threshold", c.datasets.ablation_threshold, "datasets");
  if (d.contains("language")) {
    std::string lang;
    Read(d, "language", lang, "datasets");
    try {
      c.datasets.language = datasets::ParsePromptLanguage(lang);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("datasets.language: ") + e.what());
    }
  }
  const Json& m = Section(j, "model");
  Read(m, "n_layers", c.model.n_layers, "model");
  Read(m, "d_model", c.model.d_model, "model");
  Read(m, "n_heads", c.model.n_heads, "model");
  Read(m, "context_length", c.model.context_length, "model");
  const Json& p = Section(j, "pretrain");
  Read(p, "epochs", c.pretrain.epochs, "pretrain");
  Read(p, "learning_rate", c.pretrain.learning_rate, "pretrain");
  Read(p, "batch_size", c.pretrain.batch_size, "pretrain");
  auto train = [&](const char* key, const training::TrainConfig& base) {
    Json merged = base.ToJson();
    for (const auto& [k, v] : Section(j, key).items()) merged[k] = v;
    return training::TrainConfig::FromJson(merged);
  };
  c.sft = train("sft", c.sft);
  c.dpo = train("dpo", c.dpo);
  const Json& e = Section(j, "eval");
  Read(e, "test_reports", c.eval.test_reports, "eval");
  Read(e, "tfidf_top_n", c.eval.tfidf_top_n, "eval");
  Read(e, "max_new_tokens", c.eval.max_new_tokens, "eval");
  Read(j, "seeds", c.seeds, "config");
  Read(j, "out_dir", c.out_dir, "config");
  c.Validate();
  return c;
}

PipelineConfig PipelineConfig::Load(const std::string& path) {
  PipelineConfig c;
  if (!path.empty()) {
    Json j;
    try {
      j = ReadJsonFile(path);
    } catch (const std::exception& e) {
      throw ConfigError("cannot read config '" + path + "': " + e.what());
    }
    c = FromJson(j);
  }
  if (const char* dir = std::getenv(kOutDirEnv); dir != nullptr && *dir != '\0') c.out_dir = dir;
  c.Validate();
  return c;
}

corpus::CorpusConfig PipelineConfig::CorpusFor(std::uint64_t seed, std::int64_t period) const {
  corpus::CorpusConfig c = corpus;
  c.seed = seed;
  c.period = period;
  return c;
}

int PortFromEnv(int fallback) {
  const char* v = std::getenv(kPortEnv);
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  const long port = std::strtol(v, &end, 10);
  if (*end != '\0' || port < 1 || port > 65535) throw ConfigError(std::string(kPortEnv) + " is not a valid port");
  return static_cast<int>(port);
}

}  // namespace toxq::orchestration
