// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Sequence-level training objectives. A sequence's log-likelihood is the sum
// of its label-token log-probabilities; batch losses average over records.

#pragma once

#include <limits>
#include <span>
#include <vector>

#include "toxq/lm/model.hpp"
#include "toxq/lm/transformer.hpp"

namespace toxq::training {

using lm::LoraAdapter;
using lm::ModelParams;
using lm::PackedSequence;

// Gradient sinks. An empty vector means "do not compute"; a sized vector is
// accumulated into (callers zero it).
struct Gradients {
  std::vector<Real> base;
  std::vector<Real> adapter;
};

struct PreferencePair {
  PackedSequence chosen;
  PackedSequence rejected;
  // Reference-model sequence log-likelihoods; NaN until filled.
  double ref_chosen = std::numeric_limits<double>::quiet_NaN();
  double ref_rejected = std::numeric_limits<double>::quiet_NaN();
};

struct LossValue {
  double loss = 0.0;
  double sft = 0.0;     // mean negative log-likelihood of the SFT operand
  double dpo = 0.0;     // mean -log sigmoid(margin)
  double margin = 0.0;  // mean beta * (policy - reference log-ratio difference)
};

// -log sigmoid(x), stable for large |x|.
double Softplus(double x);
double LogSigmoid(double x);

// Mean over records of -sum log P(label | prompt). Throws ContractError on an
// empty batch.
LossValue SftLoss(const ModelParams& params, const LoraAdapter* adapter, std::span<const PackedSequence> batch,
                  Gradients* grads = nullptr);

// Fills ref_chosen / ref_rejected from the frozen reference model.
void ComputeReference(const ModelParams& ref_params, const LoraAdapter* ref_adapter,
                      std::span<PreferencePair> pairs);

// mean_i -log sigmoid(beta [(pi_c - ref_c) - (pi_r - ref_r)]). Reference values
// must be filled. Throws ContractError on an empty batch.
LossValue DpoLoss(const ModelParams& params, const LoraAdapter* adapter, std::span<const PreferencePair> pairs,
                  double beta, Gradients* grads = nullptr);

// gamma * (SFT loss on the chosen responses) + DpoLoss.
LossValue CombinedLoss(const ModelParams& params, const LoraAdapter* adapter, std::span<const PreferencePair> pairs,
                       double beta, double gamma, Gradients* grads = nullptr);

// Convenience forms that evaluate the reference model first.
LossValue DpoLoss(const ModelParams& params, const LoraAdapter* adapter, const ModelParams& ref_params,
                  const LoraAdapter* ref_adapter, std::vector<PreferencePair> pairs, double beta);
LossValue CombinedLoss(const ModelParams& params, const LoraAdapter* adapter, const ModelParams& ref_params,
                       const LoraAdapter* ref_adapter, std::vector<PreferencePair> pairs, double beta, double gamma);

}  // namespace toxq::training
