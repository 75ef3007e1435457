// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Instruction and preference record formats, JSON-per-line persistence.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toxq/datasets/datasets.hpp"

namespace toxq::datasets {

enum class PromptLanguage { kEnglish, kChinese };

PromptLanguage ParsePromptLanguage(std::string_view name);  // "en" | "zh"
std::string_view PromptLanguageName(PromptLanguage lang);

struct PromptTemplate {
  std::string system;        // task description
  std::string lead_in;       // introduces the item text
  std::string output_prefix;
  std::string Instruction() const { return system + lead_in; }
};

const PromptTemplate& Template(PromptLanguage lang);

struct SftRecord {
  std::string instruction;
  std::string input;
  std::string output;
};

struct PreferenceRecord {
  std::string system;
  std::string question;
  std::array<std::string, 2> answer;  // preferred first
};

SftRecord RenderSft(const AnnotatedPair& pair, PromptLanguage lang = PromptLanguage::kEnglish);
SftRecord RenderSft(const ConcatSample& sample, PromptLanguage lang = PromptLanguage::kEnglish);
PreferenceRecord RenderPreference(const PreferenceTriple& triple, PromptLanguage lang = PromptLanguage::kEnglish);

// Keyword list text following the output prefix, or nullopt when the prefix
// is missing.
std::optional<std::string> StripOutputPrefix(std::string_view output, PromptLanguage lang);

// Inverse of RenderSft: (content, keyword text). Throws ValidationError when
// the record does not follow the template.
std::pair<std::string, std::string> ParseSft(const SftRecord& record, PromptLanguage lang);

struct ParsedPreference {
  std::string content;
  std::string preferred;
  std::string dispreferred;
};
ParsedPreference ParsePreference(const PreferenceRecord& record, PromptLanguage lang);

// Splits on ',', trims ASCII spaces, drops empties. Order and duplicates are
// kept.
std::vector<std::string> SplitKeywords(std::string_view text);

Json ToJson(const SftRecord& r);
Json ToJson(const PreferenceRecord& r);
SftRecord SftFromJson(const Json& j);
PreferenceRecord PreferenceFromJson(const Json& j);

void WriteSftJsonl(const std::string& path, const std::vector<SftRecord>& records);
std::vector<SftRecord> ReadSftJsonl(const std::string& path);
void WritePreferenceJsonl(const std::string& path, const std::vector<PreferenceRecord>& records);
std::vector<PreferenceRecord> ReadPreferenceJsonl(const std::string& path);

}  // namespace toxq::datasets
