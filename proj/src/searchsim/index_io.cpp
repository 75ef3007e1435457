// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include "toxq/common/errors.hpp"
#include "toxq/searchsim/index.hpp"

namespace toxq::searchsim {

namespace {

constexpr const char* kFormat = "toxq-index";
constexpr int kSchema = 1;

}  // namespace

void InvertedIndex::Save(const std::string& path) const {
  const IndexView view = View();
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  Json header{{"format", kFormat},
              {"schema", kSchema},
              {"version", view.version()},
              {"n_docs", core_->docs.size()},
              {"tombstones", Tombstones()}};
  out << header.dump() << '\n';
  out << core_->scorer.ToJson().dump() << '\n';
  for (const auto& d : core_->docs) {
    out << Json{{"id", d.id},
                {"category", d.category},
                {"is_toxic", d.is_toxic},
                {"campaign_id", d.campaign_id ? Json(*d.campaign_id) : Json(nullptr)},
                {"text", d.text},
                {"created_at", d.created_at}}
               .dump()
        << '\n';
  }
}

InvertedIndex InvertedIndex::Load(const std::string& path) {
  try {
    return LoadUnchecked(path);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed index record: " + e.what());
  }
}

InvertedIndex InvertedIndex::LoadUnchecked(const std::string& path) {
  const std::vector<Json> lines = ReadJsonLines(path);
  if (lines.size() < 2) throw ValidationError(path + ": truncated index file");
  const Json& header = lines[0];
  if (header.value("format", "") != kFormat || header.value("schema", 0) != kSchema) {
    throw ValidationError(path + ": not a toxq index (format/schema mismatch)");
  }
  const auto n_docs = header.at("n_docs").get<std::size_t>();
  if (lines.size() != n_docs + 2) {
    throw ValidationError(path + ": header promises " + std::to_string(n_docs) + " documents, file has " +
                          std::to_string(lines.size() - 2));
  }
  std::vector<corpus::Item> docs;
  docs.reserve(n_docs);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const Json& j = lines[i];
    corpus::Item it;
    it.id = j.at("id").get<ItemId>();
    it.category = j.at("category").get<int>();
    it.is_toxic = j.at("is_toxic").get<bool>();
    if (!j.at("campaign_id").is_null()) it.campaign_id = j.at("campaign_id").get<corpus::CampaignId>();
    it.text = j.at("text").get<std::string>();
    it.created_at = j.at("created_at").get<std::int64_t>();
    docs.push_back(std::move(it));
  }
  InvertedIndex index = Build(std::move(docs), RiskScorer::FromJson(lines[1]));
  auto removed = std::make_shared<std::vector<bool>>(*index.removed_);
  for (const Json& id : header.at("tombstones")) {
    const auto pos = index.core_->position.find(id.get<ItemId>());
    if (pos == index.core_->position.end()) throw ValidationError(path + ": tombstone for unknown id");
    (*removed)[pos->second] = true;
  }
  index.removed_ = std::move(removed);
  index.version_ = header.at("version").get<std::int64_t>();
  return index;
}

}  // namespace toxq::searchsim
