// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Self-describing checkpoint files: the 8-byte magic "TOXQCKPT", a
// little-endian uint64 header length, a JSON header (kind, dtype, config,
// vocabulary, tensor table, SHA-256 of the payload) and the raw tensor
// payload. Adapters are stored on their own and name the content hash of the
// base model they were trained against.

#pragma once

#include <string>

#include "toxq/common/jsonl.hpp"
#include "toxq/lm/model.hpp"
#include "toxq/lm/tokenizer.hpp"

namespace toxq::lm {

// SHA-256 over the config and parameter bytes.
std::string ContentHash(const ModelParams& params);
std::string ContentHash(const LoraAdapter& adapter);

struct BaseCheckpoint {
  ModelParams params;
  Tokenizer tokenizer;
  Json meta;
};

struct AdapterCheckpoint {
  LoraAdapter adapter;
  std::string base_hash;
  Json meta;
};

void SaveBase(const std::string& path, const ModelParams& params, const Tokenizer& tokenizer,
              const Json& meta = Json::object());
// Throws ValidationError on a corrupt or foreign file.
BaseCheckpoint LoadBase(const std::string& path);

void SaveAdapter(const std::string& path, const LoraAdapter& adapter, const ModelParams& base,
                 const Json& meta = Json::object());
// Throws ValidationError when the file was written against a different base.
AdapterCheckpoint LoadAdapter(const std::string& path, const ModelParams& base);

}  // namespace toxq::lm
