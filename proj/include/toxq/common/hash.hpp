// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace toxq {

// Incremental SHA-256; Hex() finalizes.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& Update(std::span<const std::byte> bytes);
  Sha256& Update(std::string_view text);
  std::string Hex();

 private:
  void* ctx_;
};

std::string Sha256Hex(std::string_view text);
std::string Sha256File(const std::filesystem::path& path);

}  // namespace toxq
