// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>

#include "toxq/common/errors.hpp"
#include "toxq/common/jsonl.hpp"
#include "toxq/corpus/corpus.hpp"

namespace toxq::corpus {

namespace fs = std::filesystem;

namespace {

template <typename T>
T Field(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

Json ToJson(const CorpusConfig& c) {
  return Json{{"seed", c.seed},
              {"n_items", c.n_items},
              {"toxic_fraction", c.toxic_fraction},
              {"n_campaigns", c.n_campaigns},
              {"n_categories", c.n_categories},
              {"annotation_noise", c.annotation_noise},
              {"period", c.period}};
}

CorpusConfig CorpusConfigFromJson(const Json& j) {
  if (!j.is_object()) throw ConfigError("corpus config must be a JSON object");
  CorpusConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.n_items = j.value("n_items", c.n_items);
    c.toxic_fraction = j.value("toxic_fraction", c.toxic_fraction);
    c.n_campaigns = j.value("n_campaigns", c.n_campaigns);
    c.n_categories = j.value("n_categories", c.n_categories);
    c.annotation_noise = j.value("annotation_noise", c.annotation_noise);
    c.period = j.value("period", c.period);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("corpus config: a field has the wrong type");
  }
  c.Validate();
  return c;
}

void WriteCorpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  WriteJsonFile(fs::path(dir) / "config.json", ToJson(corpus.config));
  std::vector<Json> items;
  items.reserve(corpus.items.size());
  for (const auto& it : corpus.items) {
    items.push_back(Json{{"id", it.id},
                         {"category", it.category},
                         {"is_toxic", it.is_toxic},
                         {"campaign_id", it.campaign_id ? Json(*it.campaign_id) : Json(nullptr)},
                         {"text", it.text},
                         {"created_at", it.created_at}});
  }
  WriteJsonLines(fs::path(dir) / "items.jsonl", items);
  std::vector<Json> campaigns;
  for (const auto& c : corpus.campaigns) {
    campaigns.push_back(Json{{"id", c.id},
                             {"category", c.category},
                             {"signature_phrases", c.signature_phrases},
                             {"disguise_vocabulary", c.disguise_vocabulary},
                             {"template", c.template_text}});
  }
  WriteJsonLines(fs::path(dir) / "campaigns.jsonl", campaigns);
}

Corpus ReadCorpus(const std::string& dir) {
  Corpus corpus;
  const Json cfg = ReadJsonFile(fs::path(dir) / "config.json");
  const std::string cw = dir + "/config.json";
  corpus.config.seed = Field<std::uint64_t>(cfg, "seed", cw);
  corpus.config.n_items = Field<std::int64_t>(cfg, "n_items", cw);
  corpus.config.toxic_fraction = Field<double>(cfg, "toxic_fraction", cw);
  corpus.config.n_campaigns = Field<std::int64_t>(cfg, "n_campaigns", cw);
  corpus.config.n_categories = Field<std::int64_t>(cfg, "n_categories", cw);
  corpus.config.annotation_noise = Field<double>(cfg, "annotation_noise", cw);
  corpus.config.period = cfg.value("period", std::int64_t{0});

  for (const Json& j : ReadJsonLines(fs::path(dir) / "items.jsonl")) {
    const std::string w = dir + "/items.jsonl";
    Item it;
    it.id = Field<ItemId>(j, "id", w);
    it.category = Field<int>(j, "category", w);
    it.is_toxic = Field<bool>(j, "is_toxic", w);
    if (j.contains("campaign_id") && !j["campaign_id"].is_null()) it.campaign_id = Field<CampaignId>(j, "campaign_id", w);
    it.text = Field<std::string>(j, "text", w);
    it.created_at = Field<std::int64_t>(j, "created_at", w);
    if (it.is_toxic && !it.campaign_id) {
      throw ValidationError(w + ": toxic item " + std::to_string(it.id) + " has no campaign_id");
    }
    corpus.items.push_back(std::move(it));
  }
  for (const Json& j : ReadJsonLines(fs::path(dir) / "campaigns.jsonl")) {
    const std::string w = dir + "/campaigns.jsonl";
    Campaign c;
    c.id = Field<CampaignId>(j, "id", w);
    c.category = Field<int>(j, "category", w);
    c.signature_phrases = Field<std::vector<std::string>>(j, "signature_phrases", w);
    c.disguise_vocabulary = Field<std::vector<std::string>>(j, "disguise_vocabulary", w);
    c.template_text = Field<std::string>(j, "template", w);
    corpus.campaigns.push_back(std::move(c));
  }
  corpus.Reindex();
  return corpus;
}

void WriteReports(const std::vector<Report>& reports, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports) {
    rows.push_back(Json{{"item_id", r.item_id}, {"oracle_keywords", r.oracle_keywords}, {"tick", r.tick}});
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  WriteJsonLines(path, rows);
}

std::vector<Report> ReadReports(const std::string& path) {
  std::vector<Report> reports;
  for (const Json& j : ReadJsonLines(path)) {
    Report r;
    r.item_id = Field<ItemId>(j, "item_id", path);
    r.oracle_keywords = Field<std::vector<std::string>>(j, "oracle_keywords", path);
    r.tick = Field<std::int64_t>(j, "tick", path);
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace toxq::corpus
