// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace toxq {

using Json = nlohmann::json;

// Line-delimited JSON. Writes compact records terminated by '\n'.
void WriteJsonLines(const std::filesystem::path& path, const std::vector<Json>& records);
std::vector<Json> ReadJsonLines(const std::filesystem::path& path);

Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& value);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace toxq
