// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/lm/model.hpp"

#include <cmath>

#include "toxq/common/errors.hpp"
#include "toxq/common/rng.hpp"

namespace toxq::lm {

void ModelConfig::Validate() const {
  if (vocab_size < 1) throw ConfigError("model config: vocab_size must be >= 1");
  if (n_layers < 1) throw ConfigError("model config: n_layers must be >= 1");
  if (d_model < 1) throw ConfigError("model config: d_model must be >= 1");
  if (n_heads < 1 || d_model % n_heads != 0) {
    throw ConfigError("model config: n_heads must be >= 1 and divide d_model");
  }
  if (context_length < 2) throw ConfigError("model config: context_length must be >= 2");
}

Json ModelConfig::ToJson() const {
  return Json{{"vocab_size", vocab_size},
              {"n_layers", n_layers},
              {"d_model", d_model},
              {"n_heads", n_heads},
              {"context_length", context_length}};
}

ModelConfig ModelConfig::FromJson(const Json& j) {
  ModelConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.d_model = j.value("d_model", c.d_model);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.context_length = j.value("context_length", c.context_length);
  return c;
}

std::size_t ModelParams::Add(const std::string& name, std::size_t rows, std::size_t cols) {
  const std::size_t offset = tensors_.empty() ? 0 : tensors_.back().offset + tensors_.back().size();
  tensors_.push_back(TensorInfo{name, rows, cols, offset});
  return offset;
}

LinearMap ModelParams::AddLinear(const std::string& name, std::size_t in, std::size_t out) {
  LinearMap m{name, in, out, 0, 0};
  m.weight = Add(name + ".weight", out, in);
  m.bias = Add(name + ".bias", 1, out);
  linears_.push_back(m);
  return m;
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config.Validate();
  const auto d = static_cast<std::size_t>(config.d_model);
  const auto v = static_cast<std::size_t>(config.vocab_size);
  const auto f = static_cast<std::size_t>(config.d_ff());
  tok_emb_ = Add("tok_emb", v, d);
  pos_emb_ = Add("pos_emb", static_cast<std::size_t>(config.context_length), d);
  for (std::int64_t l = 0; l < config.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerLayout L{};
    L.ln1_gain = Add(p + "ln1.gain", 1, d);
    L.ln1_bias = Add(p + "ln1.bias", 1, d);
    L.q = AddLinear(p + "attn.q", d, d);
    L.k = AddLinear(p + "attn.k", d, d);
    L.v = AddLinear(p + "attn.v", d, d);
    L.o = AddLinear(p + "attn.o", d, d);
    L.ln2_gain = Add(p + "ln2.gain", 1, d);
    L.ln2_bias = Add(p + "ln2.bias", 1, d);
    L.fc1 = AddLinear(p + "mlp.fc1", d, f);
    L.fc2 = AddLinear(p + "mlp.fc2", f, d);
    layers_.push_back(L);
  }
  lnf_gain_ = Add("ln_f.gain", 1, d);
  lnf_bias_ = Add("ln_f.bias", 1, d);
  AddLinear("head", d, v);
  data.assign(tensors_.back().offset + tensors_.back().size(), Real{0});
}

const TensorInfo& ModelParams::tensor(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw NotFoundError("no tensor named '" + name + "'");
}

ModelParams ModelParams::Init(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  Rng rng(seed);
  const double resid = 0.02 / std::sqrt(2.0 * static_cast<double>(config.n_layers));
  auto fill = [&](std::size_t offset, std::size_t n, double std) {
    for (std::size_t i = 0; i < n; ++i) p.data[offset + i] = static_cast<Real>(rng.Normal(0.0, std));
  };
  auto ones = [&](std::size_t offset) {
    for (std::int64_t i = 0; i < config.d_model; ++i) p.data[offset + static_cast<std::size_t>(i)] = Real{1};
  };
  fill(p.tok_emb_, p.tensor("tok_emb").size(), 0.02);
  fill(p.pos_emb_, p.tensor("pos_emb").size(), 0.01);
  for (const auto& L : p.layers_) {
    ones(L.ln1_gain);
    ones(L.ln2_gain);
    for (const LinearMap* m : {&L.q, &L.k, &L.v, &L.fc1}) fill(m->weight, m->in * m->out, 0.02);
    for (const LinearMap* m : {&L.o, &L.fc2}) fill(m->weight, m->in * m->out, resid);
  }
  ones(p.lnf_gain_);
  fill(p.head().weight, p.head().in * p.head().out, 0.02);
  return p;
}

namespace {

std::vector<LoraTarget> LayoutTargets(const ModelParams& base, std::int64_t rank) {
  std::vector<LoraTarget> targets;
  std::size_t offset = 0;
  const auto r = static_cast<std::size_t>(rank);
  for (const auto& m : base.linear_maps()) {
    LoraTarget t{m.name, m.in, m.out, offset, offset + m.in * r};
    offset = t.b + r * m.out;
    targets.push_back(t);
  }
  return targets;
}

}  // namespace

LoraAdapter LoraFromParts(std::int64_t rank, double alpha, const ModelParams& base, std::vector<Real> data) {
  if (rank < 1) throw ConfigError("lora: rank must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("lora: alpha must be > 0");
  LoraAdapter a;
  a.rank_ = rank;
  a.alpha_ = alpha;
  a.targets_ = LayoutTargets(base, rank);
  const std::size_t n = a.targets_.empty() ? 0 : a.targets_.back().b + static_cast<std::size_t>(rank) * a.targets_.back().out;
  if (data.empty()) data.assign(n, Real{0});
  if (data.size() != n) {
    throw ContractError("lora: adapter has " + std::to_string(data.size()) + " values, shape needs " +
                        std::to_string(n));
  }
  a.data = std::move(data);
  return a;
}

LoraAdapter LoraAdapter::Create(const ModelParams& base, std::int64_t rank, double alpha, std::uint64_t seed) {
  LoraAdapter a = LoraFromParts(rank, alpha, base, {});
  Rng rng(seed);
  for (const auto& t : a.targets_) {
    const double std = 1.0 / std::sqrt(static_cast<double>(t.in));
    for (std::size_t i = 0; i < t.in * static_cast<std::size_t>(rank); ++i) {
      a.data[t.a + i] = static_cast<Real>(rng.Normal(0.0, std));
    }
  }
  return a;
}

void LoraAdapter::CheckCompatible(const ModelParams& base) const {
  const auto& maps = base.linear_maps();
  if (maps.size() != targets_.size()) throw ContractError("lora: adapter targets a different number of linear maps");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (maps[i].in != targets_[i].in || maps[i].out != targets_[i].out) {
      throw ContractError("lora: shape mismatch on " + maps[i].name);
    }
  }
}

ModelParams MergeAdapter(const ModelParams& base, const LoraAdapter& adapter) {
  adapter.CheckCompatible(base);
  ModelParams merged = base;
  const auto r = static_cast<std::size_t>(adapter.rank());
  const Real s = adapter.scale();
  for (std::size_t i = 0; i < adapter.targets().size(); ++i) {
    const LoraTarget& t = adapter.targets()[i];
    Real* w = merged.data.data() + base.linear_maps()[i].weight;
    const Real* A = adapter.data.data() + t.a;
    const Real* B = adapter.data.data() + t.b;
    // W is out x in; the update is (A B)^T.
    for (std::size_t o = 0; o < t.out; ++o) {
      for (std::size_t in = 0; in < t.in; ++in) {
        Real acc = 0;
        for (std::size_t k = 0; k < r; ++k) acc += A[in * r + k] * B[k * t.out + o];
        w[o * t.in + in] += s * acc;
      }
    }
  }
  return merged;
}

}  // namespace toxq::lm
