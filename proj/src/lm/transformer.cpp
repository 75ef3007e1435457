// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/lm/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toxq/common/errors.hpp"
#include "toxq/kernels/kernels.hpp"

namespace toxq::lm {

namespace {

using kernels::MakeMat;
using kernels::Mat;

Mat<const Real> CMat(const Real* p, std::size_t rows, std::size_t cols, std::size_t stride) {
  return Mat<const Real>{p, rows, cols, stride};
}
Mat<const Real> CMat(const Real* p, std::size_t rows, std::size_t cols) { return CMat(p, rows, cols, cols); }

void Fit(std::vector<Real>& v, std::size_t n) { v.resize(n); }

constexpr Real kGeluC = Real(0.7978845608028654);  // sqrt(2/pi)
constexpr Real kGeluA = Real(0.044715);

// y = x W^T + b (+ s (x A) B), caching u = x A.
void LinearForward(const ModelParams& p, const LinearMap& m, const LoraAdapter* ad, std::size_t target,
                   const Real* x, std::size_t T, Real* y, std::vector<Real>& u) {
  const Real* w = p.data.data() + m.weight;
  const Real* b = p.data.data() + m.bias;
  kernels::GemmNT<Real>(CMat(x, T, m.in), CMat(w, m.out, m.in), MakeMat(y, T, m.out), Real{1}, false);
  for (std::size_t t = 0; t < T; ++t) {
    Real* row = y + t * m.out;
    for (std::size_t o = 0; o < m.out; ++o) row[o] += b[o];
  }
  if (ad == nullptr) return;
  const LoraTarget& lt = ad->targets()[target];
  const auto r = static_cast<std::size_t>(ad->rank());
  Fit(u, T * r);
  kernels::GemmNN<Real>(CMat(x, T, m.in), CMat(ad->data.data() + lt.a, m.in, r), MakeMat(u.data(), T, r), Real{1},
                        false);
  kernels::GemmNN<Real>(CMat(u.data(), T, r), CMat(ad->data.data() + lt.b, r, m.out), MakeMat(y, T, m.out),
                        ad->scale(), true);
}

// dx (+)= dy W (+ s dy B^T A^T); parameter gradients accumulated when asked.
void LinearBackward(const ModelParams& p, const LinearMap& m, const LoraAdapter* ad, std::size_t target,
                    const Real* x, std::size_t T, const std::vector<Real>& u, const Real* dy, Real* dx,
                    bool accumulate_dx, Real* base_grad, Real* adapter_grad, std::vector<Real>& du) {
  const Real* w = p.data.data() + m.weight;
  kernels::GemmNN<Real>(CMat(dy, T, m.out), CMat(w, m.out, m.in), MakeMat(dx, T, m.in), Real{1}, accumulate_dx);
  if (base_grad != nullptr) {
    kernels::GemmTN<Real>(CMat(dy, T, m.out), CMat(x, T, m.in), MakeMat(base_grad + m.weight, m.out, m.in), Real{1},
                          true);
    Real* gb = base_grad + m.bias;
    for (std::size_t t = 0; t < T; ++t) {
      const Real* row = dy + t * m.out;
      for (std::size_t o = 0; o < m.out; ++o) gb[o] += row[o];
    }
  }
  if (ad == nullptr) return;
  const LoraTarget& lt = ad->targets()[target];
  const auto r = static_cast<std::size_t>(ad->rank());
  const Real s = ad->scale();
  Fit(du, T * r);
  kernels::GemmNT<Real>(CMat(dy, T, m.out), CMat(ad->data.data() + lt.b, r, m.out), MakeMat(du.data(), T, r), s,
                        false);
  if (adapter_grad != nullptr) {
    kernels::GemmTN<Real>(CMat(u.data(), T, r), CMat(dy, T, m.out), MakeMat(adapter_grad + lt.b, r, m.out), s, true);
    kernels::GemmTN<Real>(CMat(x, T, m.in), CMat(du.data(), T, r), MakeMat(adapter_grad + lt.a, m.in, r), Real{1},
                          true);
  }
  kernels::GemmNT<Real>(CMat(du.data(), T, r), CMat(ad->data.data() + lt.a, m.in, r), MakeMat(dx, T, m.in), Real{1},
                        true);
}

void LayerNormForward(const Real* x, const Real* gain, const Real* bias, std::size_t T, std::size_t d, Real* y,
                      Real* mean, Real* rstd) {
  for (std::size_t t = 0; t < T; ++t) {
    const Real* row = x + t * d;
    Real mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<Real>(d);
    const Real rs = Real{1} / std::sqrt(var + kLayerNormEps);
    mean[t] = mu;
    rstd[t] = rs;
    for (std::size_t i = 0; i < d; ++i) y[t * d + i] = (row[i] - mu) * rs * gain[i] + bias[i];
  }
}

// dx += LayerNorm backward of dy.
void LayerNormBackward(const Real* x, const Real* gain, const Real* mean, const Real* rstd, const Real* dy,
                       std::size_t T, std::size_t d, Real* dx, Real* dgain, Real* dbias) {
  for (std::size_t t = 0; t < T; ++t) {
    const Real* row = x + t * d;
    const Real* g = dy + t * d;
    Real sum_dxhat = 0;
    Real sum_dxhat_xhat = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const Real xhat = (row[i] - mean[t]) * rstd[t];
      const Real dxhat = g[i] * gain[i];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
      if (dgain != nullptr) {
        dgain[i] += g[i] * xhat;
        dbias[i] += g[i];
      }
    }
    const Real inv_d = Real{1} / static_cast<Real>(d);
    for (std::size_t i = 0; i < d; ++i) {
      const Real xhat = (row[i] - mean[t]) * rstd[t];
      const Real dxhat = g[i] * gain[i];
      dx[t * d + i] += rstd[t] * (dxhat - inv_d * sum_dxhat - xhat * inv_d * sum_dxhat_xhat);
    }
  }
}

Real Gelu(Real x) { return Real(0.5) * x * (Real{1} + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

Real GeluGrad(Real x) {
  const Real th = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return Real(0.5) * (Real{1} + th) + Real(0.5) * x * (Real{1} - th * th) * kGeluC * (Real{1} + 3 * kGeluA * x * x);
}

}  // namespace

Real LogSumExp(const Real* x, std::size_t n) {
  Real m = -std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  Real s = 0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

void Forward(const ModelParams& params, const LoraAdapter* adapter, std::span<const TokenId> tokens, Workspace& ws) {
  const ModelConfig& c = params.config();
  const std::size_t T = tokens.size();
  if (T == 0 || T > static_cast<std::size_t>(c.context_length)) {
    throw ContractError("forward: sequence length " + std::to_string(T) + " outside [1, context_length]");
  }
  if (adapter != nullptr) adapter->CheckCompatible(params);
  const auto d = static_cast<std::size_t>(c.d_model);
  const auto f = static_cast<std::size_t>(c.d_ff());
  const auto V = static_cast<std::size_t>(c.vocab_size);
  const auto H = static_cast<std::size_t>(c.n_heads);
  const auto dh = static_cast<std::size_t>(c.d_head());
  const Real* P = params.data.data();
  const Real att_scale = Real{1} / std::sqrt(static_cast<Real>(dh));

  ws.T = T;
  ws.tokens.assign(tokens.begin(), tokens.end());
  ws.layers.resize(static_cast<std::size_t>(c.n_layers));

  std::vector<Real> x(T * d);
  for (std::size_t t = 0; t < T; ++t) {
    const TokenId id = tokens[t];
    if (id < 0 || static_cast<std::size_t>(id) >= V) throw ContractError("forward: token id out of range");
    const Real* te = P + params.token_embedding() + static_cast<std::size_t>(id) * d;
    const Real* pe = P + params.position_embedding() + t * d;
    for (std::size_t i = 0; i < d; ++i) x[t * d + i] = te[i] + pe[i];
  }

  for (std::size_t l = 0; l < ws.layers.size(); ++l) {
    const LayerLayout& L = params.layer(l);
    LayerCache& lc = ws.layers[l];
    const std::size_t base = l * 6;
    lc.x_in = x;
    Fit(lc.ln1, T * d);
    Fit(lc.ln1_mean, T);
    Fit(lc.ln1_rstd, T);
    LayerNormForward(lc.x_in.data(), P + L.ln1_gain, P + L.ln1_bias, T, d, lc.ln1.data(), lc.ln1_mean.data(),
                     lc.ln1_rstd.data());
    Fit(lc.q, T * d);
    Fit(lc.k, T * d);
    Fit(lc.v, T * d);
    LinearForward(params, L.q, adapter, base + 0, lc.ln1.data(), T, lc.q.data(), lc.u[0]);
    LinearForward(params, L.k, adapter, base + 1, lc.ln1.data(), T, lc.k.data(), lc.u[1]);
    LinearForward(params, L.v, adapter, base + 2, lc.ln1.data(), T, lc.v.data(), lc.u[2]);

    Fit(lc.probs, H * T * T);
    Fit(lc.att, T * d);
    for (std::size_t h = 0; h < H; ++h) {
      Real* S = lc.probs.data() + h * T * T;
      kernels::GemmNT<Real>(CMat(lc.q.data() + h * dh, T, dh, d), CMat(lc.k.data() + h * dh, T, dh, d),
                            MakeMat(S, T, T), att_scale, false);
      for (std::size_t i = 0; i < T; ++i) {
        Real* row = S + i * T;
        const Real lse = LogSumExp(row, i + 1);
        for (std::size_t j = 0; j <= i; ++j) row[j] = std::exp(row[j] - lse);
        for (std::size_t j = i + 1; j < T; ++j) row[j] = 0;
      }
      kernels::GemmNN<Real>(CMat(S, T, T), CMat(lc.v.data() + h * dh, T, dh, d),
                            MakeMat(lc.att.data() + h * dh, T, dh, d), Real{1}, false);
    }
    std::vector<Real> proj(T * d);
    LinearForward(params, L.o, adapter, base + 3, lc.att.data(), T, proj.data(), lc.u[3]);
    Fit(lc.x_mid, T * d);
    for (std::size_t i = 0; i < T * d; ++i) lc.x_mid[i] = lc.x_in[i] + proj[i];

    Fit(lc.ln2, T * d);
    Fit(lc.ln2_mean, T);
    Fit(lc.ln2_rstd, T);
    LayerNormForward(lc.x_mid.data(), P + L.ln2_gain, P + L.ln2_bias, T, d, lc.ln2.data(), lc.ln2_mean.data(),
                     lc.ln2_rstd.data());
    Fit(lc.h_pre, T * f);
    Fit(lc.h_act, T * f);
    LinearForward(params, L.fc1, adapter, base + 4, lc.ln2.data(), T, lc.h_pre.data(), lc.u[4]);
    for (std::size_t i = 0; i < T * f; ++i) lc.h_act[i] = Gelu(lc.h_pre[i]);
    LinearForward(params, L.fc2, adapter, base + 5, lc.h_act.data(), T, proj.data(), lc.u[5]);
    for (std::size_t i = 0; i < T * d; ++i) x[i] = lc.x_mid[i] + proj[i];
  }

  ws.x_out = x;
  Fit(ws.lnf, T * d);
  Fit(ws.lnf_mean, T);
  Fit(ws.lnf_rstd, T);
  LayerNormForward(ws.x_out.data(), P + params.final_gain(), P + params.final_bias(), T, d, ws.lnf.data(),
                   ws.lnf_mean.data(), ws.lnf_rstd.data());
  Fit(ws.logits, T * V);
  LinearForward(params, params.head(), adapter, params.linear_maps().size() - 1, ws.lnf.data(), T,
                ws.logits.data(), ws.u_head);
}

void Backward(const ModelParams& params, const LoraAdapter* adapter, Workspace& ws, std::span<const Real> dlogits,
              Real* base_grad, Real* adapter_grad) {
  const ModelConfig& c = params.config();
  const std::size_t T = ws.T;
  const auto d = static_cast<std::size_t>(c.d_model);
  const auto f = static_cast<std::size_t>(c.d_ff());
  const auto V = static_cast<std::size_t>(c.vocab_size);
  const auto H = static_cast<std::size_t>(c.n_heads);
  const auto dh = static_cast<std::size_t>(c.d_head());
  const Real* P = params.data.data();
  const Real att_scale = Real{1} / std::sqrt(static_cast<Real>(dh));
  if (dlogits.size() != T * V) throw ContractError("backward: dlogits has the wrong size");

  std::vector<Real> du;
  // d(loss)/d(lnf output), then through the final layer norm into dx.
  Fit(ws.dln, T * d);
  LinearBackward(params, params.head(), adapter, params.linear_maps().size() - 1, ws.lnf.data(), T, ws.u_head,
                 dlogits.data(), ws.dln.data(), false, base_grad, adapter_grad, du);
  ws.dx.assign(T * d, Real{0});
  LayerNormBackward(ws.x_out.data(), P + params.final_gain(), ws.lnf_mean.data(), ws.lnf_rstd.data(),
                    ws.dln.data(), T, d, ws.dx.data(), base_grad ? base_grad + params.final_gain() : nullptr,
                    base_grad ? base_grad + params.final_bias() : nullptr);

  for (std::size_t l = ws.layers.size(); l-- > 0;) {
    const LayerLayout& L = params.layer(l);
    LayerCache& lc = ws.layers[l];
    const std::size_t base = l * 6;

    // Feed-forward block: dx holds d(loss)/d(x_out).
    Fit(ws.dh, T * f);
    LinearBackward(params, L.fc2, adapter, base + 5, lc.h_act.data(), T, lc.u[5], ws.dx.data(), ws.dh.data(), false,
                   base_grad, adapter_grad, du);
    for (std::size_t i = 0; i < T * f; ++i) ws.dh[i] *= GeluGrad(lc.h_pre[i]);
    Fit(ws.dln, T * d);
    LinearBackward(params, L.fc1, adapter, base + 4, lc.ln2.data(), T, lc.u[4], ws.dh.data(), ws.dln.data(), false,
                   base_grad, adapter_grad, du);
    LayerNormBackward(lc.x_mid.data(), P + L.ln2_gain, lc.ln2_mean.data(), lc.ln2_rstd.data(), ws.dln.data(), T, d,
                      ws.dx.data(), base_grad ? base_grad + L.ln2_gain : nullptr,
                      base_grad ? base_grad + L.ln2_bias : nullptr);

    // Attention block: dx now holds d(loss)/d(x_mid).
    Fit(ws.datt, T * d);
    LinearBackward(params, L.o, adapter, base + 3, lc.att.data(), T, lc.u[3], ws.dx.data(), ws.datt.data(), false,
                   base_grad, adapter_grad, du);
    Fit(ws.dq, T * d);
    Fit(ws.dk, T * d);
    Fit(ws.dv, T * d);
    Fit(ws.dscores, T * T);
    for (std::size_t h = 0; h < H; ++h) {
      const Real* Pm = lc.probs.data() + h * T * T;
      Real* dS = ws.dscores.data();
      const auto dO = CMat(ws.datt.data() + h * dh, T, dh, d);
      kernels::GemmNT<Real>(dO, CMat(lc.v.data() + h * dh, T, dh, d), MakeMat(dS, T, T), Real{1}, false);
      kernels::GemmTN<Real>(CMat(Pm, T, T), dO, MakeMat(ws.dv.data() + h * dh, T, dh, d), Real{1}, false);
      for (std::size_t i = 0; i < T; ++i) {
        Real* row = dS + i * T;
        const Real* prow = Pm + i * T;
        Real dot = 0;
        for (std::size_t j = 0; j <= i; ++j) dot += prow[j] * row[j];
        for (std::size_t j = 0; j <= i; ++j) row[j] = prow[j] * (row[j] - dot);
        for (std::size_t j = i + 1; j < T; ++j) row[j] = 0;
      }
      kernels::GemmNN<Real>(CMat(dS, T, T), CMat(lc.k.data() + h * dh, T, dh, d),
                            MakeMat(ws.dq.data() + h * dh, T, dh, d), att_scale, false);
      kernels::GemmTN<Real>(CMat(dS, T, T), CMat(lc.q.data() + h * dh, T, dh, d),
                            MakeMat(ws.dk.data() + h * dh, T, dh, d), att_scale, false);
    }
    Fit(ws.dln, T * d);
    LinearBackward(params, L.q, adapter, base + 0, lc.ln1.data(), T, lc.u[0], ws.dq.data(), ws.dln.data(), false,
                   base_grad, adapter_grad, du);
    LinearBackward(params, L.k, adapter, base + 1, lc.ln1.data(), T, lc.u[1], ws.dk.data(), ws.dln.data(), true,
                   base_grad, adapter_grad, du);
    LinearBackward(params, L.v, adapter, base + 2, lc.ln1.data(), T, lc.u[2], ws.dv.data(), ws.dln.data(), true,
                   base_grad, adapter_grad, du);
    LayerNormBackward(lc.x_in.data(), P + L.ln1_gain, lc.ln1_mean.data(), lc.ln1_rstd.data(), ws.dln.data(), T, d,
                      ws.dx.data(), base_grad ? base_grad + L.ln1_gain : nullptr,
                      base_grad ? base_grad + L.ln1_bias : nullptr);
  }

  if (base_grad != nullptr) {
    for (std::size_t t = 0; t < T; ++t) {
      Real* te = base_grad + params.token_embedding() + static_cast<std::size_t>(ws.tokens[t]) * d;
      Real* pe = base_grad + params.position_embedding() + t * d;
      for (std::size_t i = 0; i < d; ++i) {
        te[i] += ws.dx[t * d + i];
        pe[i] += ws.dx[t * d + i];
      }
    }
  }
}

PackedSequence Pack(std::span<const TokenId> prompt, std::span<const TokenId> label, std::size_t context_length) {
  if (prompt.empty() || label.empty()) throw ValidationError("pack: prompt and label must be non-empty");
  if (label.size() > context_length) {
    throw ValidationError("pack: label of " + std::to_string(label.size()) + " tokens exceeds the context of " +
                          std::to_string(context_length));
  }
  PackedSequence s;
  const std::size_t total = prompt.size() + label.size() - 1;
  s.dropped = total > context_length ? total - context_length : 0;
  const auto kept = prompt.subspan(s.dropped);
  s.inputs.assign(kept.begin(), kept.end());
  s.inputs.insert(s.inputs.end(), label.begin(), label.end() - 1);
  s.targets.assign(s.inputs.size(), -1);
  for (std::size_t i = 0; i < label.size(); ++i) s.targets[kept.size() - 1 + i] = label[i];
  s.n_targets = label.size();
  return s;
}

double LabelLogProb(const ModelParams& params, const LoraAdapter* adapter, const PackedSequence& seq, Workspace& ws,
                    std::vector<Real>* per_token) {
  Forward(params, adapter, seq.inputs, ws);
  const auto V = static_cast<std::size_t>(params.config().vocab_size);
  if (per_token != nullptr) per_token->clear();
  double total = 0.0;
  for (std::size_t t = 0; t < seq.targets.size(); ++t) {
    if (seq.targets[t] < 0) continue;
    const Real* row = ws.logits.data() + t * V;
    const Real lp = row[static_cast<std::size_t>(seq.targets[t])] - LogSumExp(row, V);
    total += static_cast<double>(lp);
    if (per_token != nullptr) per_token->push_back(lp);
  }
  return total;
}

void LabelLogProbBackward(const ModelParams& params, const LoraAdapter* adapter, const PackedSequence& seq,
                          Workspace& ws, Real coef, Real* base_grad, Real* adapter_grad) {
  const auto V = static_cast<std::size_t>(params.config().vocab_size);
  ws.dlogits.assign(ws.T * V, Real{0});
  for (std::size_t t = 0; t < seq.targets.size(); ++t) {
    if (seq.targets[t] < 0) continue;
    const Real* row = ws.logits.data() + t * V;
    Real* g = ws.dlogits.data() + t * V;
    const Real lse = LogSumExp(row, V);
    for (std::size_t j = 0; j < V; ++j) g[j] = -coef * std::exp(row[j] - lse);
    g[static_cast<std::size_t>(seq.targets[t])] += coef;
  }
  Backward(params, adapter, ws, ws.dlogits, base_grad, adapter_grad);
}

}  // namespace toxq::lm
