// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Decoder-only transformer parameters (pre-norm, learned positions, GELU
// feed-forward) and low-rank adapters over every linear map.
//
// All weights live in one flat vector. A linear map with `in` inputs and
// `out` outputs stores W as out x in (row-major) plus a bias of length out,
// so y = x W^T + b.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toxq/common/jsonl.hpp"
#include "toxq/common/real.hpp"

namespace toxq::lm {

struct ModelConfig {
  std::int64_t vocab_size = 0;
  std::int64_t n_layers = 4;
  std::int64_t d_model = 128;
  std::int64_t n_heads = 4;
  std::int64_t context_length = 512;

  std::int64_t d_ff() const { return 4 * d_model; }
  std::int64_t d_head() const { return d_model / n_heads; }
  // Throws ConfigError naming the violated bound.
  void Validate() const;
  Json ToJson() const;
  static ModelConfig FromJson(const Json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

// A linear map inside the network, addressed by offsets into ModelParams::data.
struct LinearMap {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight = 0;
  std::size_t bias = 0;
};

struct LayerLayout {
  std::size_t ln1_gain, ln1_bias;
  LinearMap q, k, v, o;
  std::size_t ln2_gain, ln2_bias;
  LinearMap fc1, fc2;
};

class ModelParams {
 public:
  ModelParams() = default;
  // All-zero parameters (layer-norm gains included).
  explicit ModelParams(const ModelConfig& config);
  // Gaussian weights (std 0.02, residual projections scaled by
  // 1/sqrt(2 n_layers)), zero biases, unit layer-norm gains.
  static ModelParams Init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor(const std::string& name) const;
  const LayerLayout& layer(std::size_t l) const { return layers_[l]; }
  // q, k, v, o, fc1, fc2 per layer in order, then the output head.
  const std::vector<LinearMap>& linear_maps() const { return linears_; }

  std::size_t token_embedding() const { return tok_emb_; }
  std::size_t position_embedding() const { return pos_emb_; }
  std::size_t final_gain() const { return lnf_gain_; }
  std::size_t final_bias() const { return lnf_bias_; }
  const LinearMap& head() const { return linears_.back(); }

  std::vector<Real> data;

 private:
  std::size_t Add(const std::string& name, std::size_t rows, std::size_t cols);
  LinearMap AddLinear(const std::string& name, std::size_t in, std::size_t out);

  ModelConfig config_;
  std::vector<TensorInfo> tensors_;
  std::vector<LayerLayout> layers_;
  std::vector<LinearMap> linears_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, lnf_gain_ = 0, lnf_bias_ = 0;
};

struct LoraTarget {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t a = 0;  // in x rank
  std::size_t b = 0;  // rank x out
};

// Low-rank update W^T += (alpha / rank) A B for every linear map of a model,
// in ModelParams::linear_maps() order.
class LoraAdapter {
 public:
  LoraAdapter() = default;
  // A ~ N(0, 1/in), B = 0.
  static LoraAdapter Create(const ModelParams& base, std::int64_t rank, double alpha, std::uint64_t seed);

  std::int64_t rank() const { return rank_; }
  double alpha() const { return alpha_; }
  Real scale() const { return static_cast<Real>(alpha_ / static_cast<double>(rank_)); }
  const std::vector<LoraTarget>& targets() const { return targets_; }
  std::size_t ParamCount() const { return data.size(); }
  // Throws ContractError when the adapter was built for another shape.
  void CheckCompatible(const ModelParams& base) const;

  std::vector<Real> data;

 private:
  std::int64_t rank_ = 0;
  double alpha_ = 0.0;
  std::vector<LoraTarget> targets_;

  friend LoraAdapter LoraFromParts(std::int64_t, double, const ModelParams&, std::vector<Real>);
};

LoraAdapter LoraFromParts(std::int64_t rank, double alpha, const ModelParams& base, std::vector<Real> data);

// Standalone parameters whose forward pass equals the adapted one.
ModelParams MergeAdapter(const ModelParams& base, const LoraAdapter& adapter);

}  // namespace toxq::lm
