// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Forward and backward passes over a single token sequence.

#pragma once

#include <span>
#include <vector>

#include "toxq/lm/model.hpp"
#include "toxq/lm/tokenizer.hpp"

namespace toxq::lm {

inline constexpr Real kLayerNormEps = Real(1e-5);

struct LayerCache {
  std::vector<Real> x_in, ln1, ln1_mean, ln1_rstd;
  std::vector<Real> q, k, v, probs, att, x_mid;
  std::vector<Real> ln2, ln2_mean, ln2_rstd, h_pre, h_act;
  std::vector<Real> u[6];  // x A per adapted map: q, k, v, o, fc1, fc2
};

// Activations cached by Forward for Backward. Reusable across calls.
struct Workspace {
  std::size_t T = 0;
  std::vector<TokenId> tokens;
  std::vector<LayerCache> layers;
  std::vector<Real> x_out, lnf, lnf_mean, lnf_rstd, u_head;
  std::vector<Real> logits;  // T x vocab
  // Backward scratch.
  std::vector<Real> dx, dtmp, dln, dq, dk, dv, datt, dh, dscores, dlogits;
};

// Fills ws.logits. tokens.size() must be in [1, context_length].
void Forward(const ModelParams& params, const LoraAdapter* adapter, std::span<const TokenId> tokens, Workspace& ws);

// Backpropagates dlogits (T x vocab) through the pass cached in ws. Gradients
// are added into base_grad (layout of params.data) and adapter_grad (layout of
// adapter->data); either may be null. base_grad covers every base tensor.
void Backward(const ModelParams& params, const LoraAdapter* adapter, Workspace& ws, std::span<const Real> dlogits,
              Real* base_grad, Real* adapter_grad);

// Prompt + label laid out for teacher forcing: inputs[t] predicts targets[t];
// targets are -1 on prompt positions.
struct PackedSequence {
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::size_t n_targets = 0;
  std::size_t dropped = 0;  // prompt tokens removed from the head
};

// Drops prompt tokens from the head until the inputs fit the context; the
// label is never truncated. Throws ValidationError when the label alone does
// not fit or either part is empty.
PackedSequence Pack(std::span<const TokenId> prompt, std::span<const TokenId> label, std::size_t context_length);

// Sum over label positions of log P(target | prefix). Runs Forward into ws;
// per_token, when given, receives the individual log-probabilities.
double LabelLogProb(const ModelParams& params, const LoraAdapter* adapter, const PackedSequence& seq, Workspace& ws,
                    std::vector<Real>* per_token = nullptr);

// After LabelLogProb on the same ws: adds coef * d(LabelLogProb)/d(theta).
void LabelLogProbBackward(const ModelParams& params, const LoraAdapter* adapter, const PackedSequence& seq,
                          Workspace& ws, Real coef, Real* base_grad, Real* adapter_grad);

// Row-wise log-softmax helpers shared with generation and tests.
Real LogSumExp(const Real* x, std::size_t n);

}  // namespace toxq::lm
