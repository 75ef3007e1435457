// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/lm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "toxq/common/errors.hpp"
#include "toxq/common/hash.hpp"

namespace toxq::lm {

namespace {

constexpr char kMagic[8] = {'T', 'O', 'X', 'Q', 'C', 'K', 'P', 'T'};
constexpr const char* kDtype = kRealIsDouble ? "f64" : "f32";

static_assert(std::endian::native == std::endian::little, "checkpoint payloads are little-endian");

std::string PayloadHash(const std::vector<Real>& data) {
  Sha256 h;
  h.Update(std::as_bytes(std::span<const Real>(data)));
  return h.Hex();
}

void Write(const std::string& path, const Json& header, const std::vector<Real>& data) {
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  const std::string text = header.dump();
  const std::uint64_t n = text.size();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(Real)));
}

std::pair<Json, std::vector<Real>> Read(const std::string& path, const char* kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path);
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || n > (1u << 30)) {
    throw ValidationError(path + ": not a checkpoint file");
  }
  std::string text(n, '\0');
  in.read(text.data(), static_cast<std::streamsize>(n));
  Json header;
  try {
    header = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": corrupt checkpoint header: " + e.what());
  }
  if (header.value("kind", "") != kind) throw ValidationError(path + ": expected a " + kind + " checkpoint");
  if (header.value("dtype", "") != kDtype) {
    throw ValidationError(path + ": checkpoint dtype " + header.value("dtype", "?") + " does not match this build");
  }
  const auto count = header.at("n_values").get<std::size_t>();
  std::vector<Real> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(Real)));
  if (!in) throw ValidationError(path + ": truncated checkpoint payload");
  if (PayloadHash(data) != header.at("payload_sha256").get<std::string>()) {
    throw ValidationError(path + ": checkpoint payload hash mismatch");
  }
  return {std::move(header), std::move(data)};
}

}  // namespace

std::string ContentHash(const ModelParams& params) {
  Sha256 h;
  h.Update(params.config().ToJson().dump());
  h.Update(std::as_bytes(std::span<const Real>(params.data)));
  return h.Hex();
}

std::string ContentHash(const LoraAdapter& adapter) {
  Sha256 h;
  h.Update(Json{{"rank", adapter.rank()}, {"alpha", adapter.alpha()}}.dump());
  h.Update(std::as_bytes(std::span<const Real>(adapter.data)));
  return h.Hex();
}

void SaveBase(const std::string& path, const ModelParams& params, const Tokenizer& tokenizer, const Json& meta) {
  Json tensors = Json::array();
  for (const auto& t : params.tensors()) {
    tensors.push_back(Json{{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", t.offset}});
  }
  Json vocab = Json::array();
  for (char32_t c : tokenizer.chars()) vocab.push_back(static_cast<std::uint32_t>(c));
  const Json header{{"kind", "base"},
                    {"dtype", kDtype},
                    {"config", params.config().ToJson()},
                    {"vocab", vocab},
                    {"tensors", tensors},
                    {"n_values", params.data.size()},
                    {"payload_sha256", PayloadHash(params.data)},
                    {"content_sha256", ContentHash(params)},
                    {"meta", meta}};
  Write(path, header, params.data);
}

BaseCheckpoint LoadBase(const std::string& path) {
  auto [header, data] = Read(path, "base");
  try {
    std::vector<char32_t> chars;
    for (const Json& c : header.at("vocab")) chars.push_back(static_cast<char32_t>(c.get<std::uint32_t>()));
    BaseCheckpoint ck{ModelParams(ModelConfig::FromJson(header.at("config"))), Tokenizer::FromCodePoints(chars),
                      header.value("meta", Json::object())};
    if (ck.params.data.size() != data.size()) throw ValidationError(path + ": payload size does not match config");
    if (ck.tokenizer.size() != static_cast<std::size_t>(ck.params.config().vocab_size)) {
      throw ValidationError(path + ": vocabulary size does not match config");
    }
    ck.params.data = std::move(data);
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed checkpoint header: " + e.what());
  }
}

void SaveAdapter(const std::string& path, const LoraAdapter& adapter, const ModelParams& base, const Json& meta) {
  adapter.CheckCompatible(base);
  const Json header{{"kind", "adapter"},
                    {"dtype", kDtype},
                    {"rank", adapter.rank()},
                    {"alpha", adapter.alpha()},
                    {"targets", adapter.targets().size()},
                    {"n_values", adapter.data.size()},
                    {"payload_sha256", PayloadHash(adapter.data)},
                    {"content_sha256", ContentHash(adapter)},
                    {"base_sha256", ContentHash(base)},
                    {"meta", meta}};
  Write(path, header, adapter.data);
}

AdapterCheckpoint LoadAdapter(const std::string& path, const ModelParams& base) {
  auto [header, data] = Read(path, "adapter");
  try {
    const std::string base_hash = header.at("base_sha256").get<std::string>();
    if (base_hash != ContentHash(base)) {
      throw ValidationError(path + ": adapter was trained against base " + base_hash.substr(0, 12) +
                            ", not the supplied model");
    }
    AdapterCheckpoint ck{LoraFromParts(header.at("rank").get<std::int64_t>(), header.at("alpha").get<double>(), base,
                                       std::move(data)),
                         base_hash, header.value("meta", Json::object())};
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed checkpoint header: " + e.what());
  } catch (const ContractError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace toxq::lm
