// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/training/losses.hpp"

#include <cmath>

#include "toxq/common/errors.hpp"

namespace toxq::training {

namespace {

Real* Sink(std::vector<Real>& v) { return v.empty() ? nullptr : v.data(); }

lm::Workspace& ChosenWorkspace() {
  thread_local lm::Workspace ws;
  return ws;
}

lm::Workspace& RejectedWorkspace() {
  thread_local lm::Workspace ws;
  return ws;
}

double Sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

double Softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double LogSigmoid(double x) { return -Softplus(-x); }

LossValue SftLoss(const ModelParams& params, const LoraAdapter* adapter, std::span<const PackedSequence> batch,
                  Gradients* grads) {
  if (batch.empty()) throw ContractError("sft_loss: empty batch");
  const double n = static_cast<double>(batch.size());
  LossValue v;
  for (const auto& seq : batch) {
    auto& ws = ChosenWorkspace();
    v.sft -= lm::LabelLogProb(params, adapter, seq, ws);
    if (grads != nullptr) {
      lm::LabelLogProbBackward(params, adapter, seq, ws, static_cast<Real>(-1.0 / n), Sink(grads->base),
                               Sink(grads->adapter));
    }
  }
  v.sft /= n;
  v.loss = v.sft;
  return v;
}

void ComputeReference(const ModelParams& ref_params, const LoraAdapter* ref_adapter,
                      std::span<PreferencePair> pairs) {
  for (auto& p : pairs) {
    p.ref_chosen = lm::LabelLogProb(ref_params, ref_adapter, p.chosen, ChosenWorkspace());
    p.ref_rejected = lm::LabelLogProb(ref_params, ref_adapter, p.rejected, ChosenWorkspace());
  }
}

LossValue CombinedLoss(const ModelParams& params, const LoraAdapter* adapter, std::span<const PreferencePair> pairs,
                       double beta, double gamma, Gradients* grads) {
  if (pairs.empty()) throw ContractError("dpo_loss: empty batch");
  if (!(beta > 0.0)) throw ContractError("dpo_loss: beta must be > 0");
  const double n = static_cast<double>(pairs.size());
  LossValue v;
  for (const auto& p : pairs) {
    if (std::isnan(p.ref_chosen) || std::isnan(p.ref_rejected)) {
      throw ContractError("dpo_loss: reference log-likelihoods not computed");
    }
    auto& wc = ChosenWorkspace();
    auto& wr = RejectedWorkspace();
    const double lc = lm::LabelLogProb(params, adapter, p.chosen, wc);
    const double lr = lm::LabelLogProb(params, adapter, p.rejected, wr);
    const double margin = beta * ((lc - p.ref_chosen) - (lr - p.ref_rejected));
    v.margin += margin;
    v.dpo += Softplus(-margin);
    v.sft -= lc;
    if (grads != nullptr) {
      // d softplus(-m)/dm = -sigmoid(-m).
      const double dm = -Sigmoid(-margin);
      const double coef_c = (-gamma + dm * beta) / n;
      const double coef_r = (-dm * beta) / n;
      lm::LabelLogProbBackward(params, adapter, p.chosen, wc, static_cast<Real>(coef_c), Sink(grads->base),
                               Sink(grads->adapter));
      lm::LabelLogProbBackward(params, adapter, p.rejected, wr, static_cast<Real>(coef_r), Sink(grads->base),
                               Sink(grads->adapter));
    }
  }
  v.margin /= n;
  v.dpo /= n;
  v.sft /= n;
  v.loss = gamma * v.sft + v.dpo;
  return v;
}

LossValue DpoLoss(const ModelParams& params, const LoraAdapter* adapter, std::span<const PreferencePair> pairs,
                  double beta, Gradients* grads) {
  LossValue v = CombinedLoss(params, adapter, pairs, beta, 0.0, grads);
  v.loss = v.dpo;
  return v;
}

LossValue DpoLoss(const ModelParams& params, const LoraAdapter* adapter, const ModelParams& ref_params,
                  const LoraAdapter* ref_adapter, std::vector<PreferencePair> pairs, double beta) {
  ComputeReference(ref_params, ref_adapter, pairs);
  return DpoLoss(params, adapter, pairs, beta);
}

LossValue CombinedLoss(const ModelParams& params, const LoraAdapter* adapter, const ModelParams& ref_params,
                       const LoraAdapter* ref_adapter, std::vector<PreferencePair> pairs, double beta, double gamma) {
  ComputeReference(ref_params, ref_adapter, pairs);
  return CombinedLoss(params, adapter, pairs, beta, gamma);
}

}  // namespace toxq::training
