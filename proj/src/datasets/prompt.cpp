// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/datasets/prompt.hpp"

#include <filesystem>

#include "toxq/common/errors.hpp"

namespace toxq::datasets {

PromptLanguage ParsePromptLanguage(std::string_view name) {
  if (name == "en") return PromptLanguage::kEnglish;
  if (name == "zh") return PromptLanguage::kChinese;
  throw ConfigError("prompt language must be 'en' or 'zh', got '" + std::string(name) + "'");
}

std::string_view PromptLanguageName(PromptLanguage lang) { return lang == PromptLanguage::kEnglish ? "en" : "zh"; }

const PromptTemplate& Template(PromptLanguage lang) {
  static const PromptTemplate kEnglish{
      "You are a content safety expert and need to extract key words from the improper item's information to help "
      "detect more similar risks, focusing on the unique information related to the violations. ",
      "The improper information is as follows:",
      "The collection of the extracted keywords for risk exploration is as follows, separated by commas:"};
  static const PromptTemplate kChinese{
      "你是一个内容安全专家，需要从违规商品信息中提取出有助排查相似风险的关键词，关注和违规相关的独特信息。",
      "违规信息如下：",
      "提取的风险排查关键词集合如下，以英文逗号分隔："};
  return lang == PromptLanguage::kEnglish ? kEnglish : kChinese;
}

namespace {

SftRecord Render(const std::string& content, const std::string& keywords, PromptLanguage lang) {
  const PromptTemplate& t = Template(lang);
  return SftRecord{t.Instruction(), content, t.output_prefix + keywords};
}

}  // namespace

SftRecord RenderSft(const AnnotatedPair& pair, PromptLanguage lang) { return Render(pair.content, pair.keyword, lang); }

SftRecord RenderSft(const ConcatSample& sample, PromptLanguage lang) {
  return Render(sample.content, sample.keywords, lang);
}

PreferenceRecord RenderPreference(const PreferenceTriple& triple, PromptLanguage lang) {
  const PromptTemplate& t = Template(lang);
  PreferenceRecord r;
  r.system = t.system;
  r.question = t.lead_in + triple.content;
  r.answer = {t.output_prefix + triple.PreferredText(), t.output_prefix + triple.DispreferredText()};
  return r;
}

std::optional<std::string> StripOutputPrefix(std::string_view output, PromptLanguage lang) {
  const std::string& prefix = Template(lang).output_prefix;
  if (output.substr(0, prefix.size()) != prefix) return std::nullopt;
  return std::string(output.substr(prefix.size()));
}

std::pair<std::string, std::string> ParseSft(const SftRecord& record, PromptLanguage lang) {
  if (record.instruction != Template(lang).Instruction()) {
    throw ValidationError("sft record: instruction does not match the template");
  }
  auto keywords = StripOutputPrefix(record.output, lang);
  if (!keywords) throw ValidationError("sft record: output lacks the fixed prefix");
  return {record.input, *keywords};
}

ParsedPreference ParsePreference(const PreferenceRecord& record, PromptLanguage lang) {
  const PromptTemplate& t = Template(lang);
  if (record.system != t.system) throw ValidationError("preference record: system text does not match the template");
  if (record.question.compare(0, t.lead_in.size(), t.lead_in) != 0) {
    throw ValidationError("preference record: question lacks the lead-in");
  }
  auto p = StripOutputPrefix(record.answer[0], lang);
  auto d = StripOutputPrefix(record.answer[1], lang);
  if (!p || !d) throw ValidationError("preference record: answer lacks the fixed prefix");
  return ParsedPreference{record.question.substr(t.lead_in.size()), *p, *d};
}

std::vector<std::string> SplitKeywords(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view piece = text.substr(start, end - start);
    while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
    while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
    if (!piece.empty()) out.emplace_back(piece);
    start = end + 1;
  }
  return out;
}

Json ToJson(const SftRecord& r) { return Json{{"instruction", r.instruction}, {"input", r.input}, {"output", r.output}}; }

Json ToJson(const PreferenceRecord& r) {
  return Json{{"system", r.system}, {"question", r.question}, {"answer", Json::array({r.answer[0], r.answer[1]})}};
}

SftRecord SftFromJson(const Json& j) {
  try {
    return SftRecord{j.at("instruction").get<std::string>(), j.at("input").get<std::string>(),
                     j.at("output").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("sft record: ") + e.what());
  }
}

PreferenceRecord PreferenceFromJson(const Json& j) {
  try {
    const Json& a = j.at("answer");
    if (!a.is_array() || a.size() != 2) throw ValidationError("preference record: answer must hold two responses");
    return PreferenceRecord{j.at("system").get<std::string>(), j.at("question").get<std::string>(),
                            {a[0].get<std::string>(), a[1].get<std::string>()}};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("preference record: ") + e.what());
  }
}

namespace {

void EnsureParent(const std::string& path) {
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
}

}  // namespace

void WriteSftJsonl(const std::string& path, const std::vector<SftRecord>& records) {
  std::vector<Json> rows;
  for (const auto& r : records) rows.push_back(ToJson(r));
  EnsureParent(path);
  WriteJsonLines(path, rows);
}

std::vector<SftRecord> ReadSftJsonl(const std::string& path) {
  std::vector<SftRecord> out;
  for (const Json& j : ReadJsonLines(path)) out.push_back(SftFromJson(j));
  return out;
}

void WritePreferenceJsonl(const std::string& path, const std::vector<PreferenceRecord>& records) {
  std::vector<Json> rows;
  for (const auto& r : records) rows.push_back(ToJson(r));
  EnsureParent(path);
  WriteJsonLines(path, rows);
}

std::vector<PreferenceRecord> ReadPreferenceJsonl(const std::string& path) {
  std::vector<PreferenceRecord> out;
  for (const Json& j : ReadJsonLines(path)) out.push_back(PreferenceFromJson(j));
  return out;
}

}  // namespace toxq::datasets
