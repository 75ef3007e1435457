// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "toxq/common/real.hpp"
#include "toxq/lm/model.hpp"

namespace toxq::training {

struct AdamWConfig {
  double learning_rate = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

// Named slice of a flat parameter vector, used in diagnostics.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

std::vector<ParamBlock> BaseBlocks(const lm::ModelParams& params);
std::vector<ParamBlock> AdapterBlocks(const lm::LoraAdapter& adapter);

// Decoupled weight decay (p *= 1 - lr * wd) followed by the bias-corrected
// Adam update. Throws NumericError naming the block of the first non-finite
// gradient, before anything is modified.
void AdamWStep(OptimizerState& state, std::span<Real> params, std::span<const Real> grads, const AdamWConfig& config,
               const std::vector<ParamBlock>& blocks = {});

}  // namespace toxq::training
