// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/training/adamw.hpp"

#include <cmath>

#include "toxq/common/errors.hpp"

namespace toxq::training {

std::vector<ParamBlock> BaseBlocks(const lm::ModelParams& params) {
  std::vector<ParamBlock> blocks;
  for (const auto& t : params.tensors()) blocks.push_back(ParamBlock{t.name, t.offset, t.size()});
  return blocks;
}

std::vector<ParamBlock> AdapterBlocks(const lm::LoraAdapter& adapter) {
  std::vector<ParamBlock> blocks;
  const auto r = static_cast<std::size_t>(adapter.rank());
  for (const auto& t : adapter.targets()) {
    blocks.push_back(ParamBlock{t.name + ".lora_a", t.a, t.in * r});
    blocks.push_back(ParamBlock{t.name + ".lora_b", t.b, r * t.out});
  }
  return blocks;
}

void AdamWStep(OptimizerState& state, std::span<Real> params, std::span<const Real> grads, const AdamWConfig& config,
               const std::vector<ParamBlock>& blocks) {
  if (params.size() != grads.size()) throw ContractError("adamw: parameter and gradient sizes differ");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (std::isfinite(grads[i])) continue;
    std::string where = "index " + std::to_string(i);
    for (const auto& b : blocks) {
      if (i >= b.offset && i < b.offset + b.size) where = b.name + "[" + std::to_string(i - b.offset) + "]";
    }
    throw NumericError("adamw: non-finite gradient in " + where);
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw ContractError("adamw: optimizer state does not match parameters");
  ++state.step;
  const double lr = config.learning_rate;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - lr * config.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    double p = static_cast<double>(params[i]) * decay;
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    p -= lr * mhat / (std::sqrt(vhat) + config.eps);
    params[i] = static_cast<Real>(p);
  }
}

}  // namespace toxq::training
