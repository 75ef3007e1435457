// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/lm/generate.hpp"

#include <algorithm>
#include <cmath>

#include "toxq/common/errors.hpp"
#include "toxq/common/rng.hpp"
#include "toxq/kernels/kernels.hpp"
#include "toxq/lm/transformer.hpp"

namespace toxq::lm {

void GenerationConfig::Validate() const {
  if (max_new_tokens < 1) throw ConfigError("generation: max_new_tokens must be >= 1");
  if (mode == Mode::kSample && !(temperature > 0.0)) throw ConfigError("generation: temperature must be > 0");
}

namespace {

using kernels::MakeMat;

// Incremental decoding against merged (adapter-free) parameters.
class Decoder {
 public:
  explicit Decoder(const ModelParams& p) : p_(p), c_(p.config()) {
    k_.resize(static_cast<std::size_t>(c_.n_layers));
    v_.resize(static_cast<std::size_t>(c_.n_layers));
  }

  // Runs the prompt through the batched forward pass and keeps its keys and
  // values. Returns the logits at the last prompt position.
  std::vector<Real> Prefill(const std::vector<TokenId>& prompt) {
    Workspace ws;
    Forward(p_, nullptr, prompt, ws);
    const auto d = static_cast<std::size_t>(c_.d_model);
    for (std::size_t l = 0; l < k_.size(); ++l) {
      k_[l] = ws.layers[l].k;
      v_[l] = ws.layers[l].v;
      k_[l].reserve(static_cast<std::size_t>(c_.context_length) * d);
      v_[l].reserve(static_cast<std::size_t>(c_.context_length) * d);
    }
    len_ = prompt.size();
    const auto V = static_cast<std::size_t>(c_.vocab_size);
    return std::vector<Real>(ws.logits.end() - static_cast<std::ptrdiff_t>(V), ws.logits.end());
  }

  std::vector<Real> Step(TokenId token) {
    const auto d = static_cast<std::size_t>(c_.d_model);
    const auto H = static_cast<std::size_t>(c_.n_heads);
    const auto dh = static_cast<std::size_t>(c_.d_head());
    const Real* P = p_.data.data();
    const std::size_t pos = len_;
    std::vector<Real> x(d), h(d), q(d), kv(d), att(d), proj(d);
    std::vector<Real> ff(static_cast<std::size_t>(c_.d_ff()));
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = P[p_.token_embedding() + static_cast<std::size_t>(token) * d + i] + P[p_.position_embedding() + pos * d + i];
    }
    const Real scale = Real{1} / std::sqrt(static_cast<Real>(dh));
    std::vector<Real> scores(pos + 1);
    for (std::size_t l = 0; l < k_.size(); ++l) {
      const LayerLayout& L = p_.layer(l);
      Norm(x.data(), L.ln1_gain, L.ln1_bias, h.data());
      Linear(L.q, h.data(), q.data());
      Linear(L.k, h.data(), kv.data());
      k_[l].insert(k_[l].end(), kv.begin(), kv.end());
      Linear(L.v, h.data(), kv.data());
      v_[l].insert(v_[l].end(), kv.begin(), kv.end());
      for (std::size_t hd = 0; hd < H; ++hd) {
        for (std::size_t j = 0; j <= pos; ++j) {
          scores[j] = scale * kernels::Dot<Real>(q.data() + hd * dh, k_[l].data() + j * d + hd * dh, dh);
        }
        const Real lse = LogSumExp(scores.data(), pos + 1);
        Real* out = att.data() + hd * dh;
        std::fill(out, out + dh, Real{0});
        for (std::size_t j = 0; j <= pos; ++j) {
          kernels::Axpy<Real>(std::exp(scores[j] - lse), v_[l].data() + j * d + hd * dh, out, dh);
        }
      }
      Linear(L.o, att.data(), proj.data());
      for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];
      Norm(x.data(), L.ln2_gain, L.ln2_bias, h.data());
      Linear(L.fc1, h.data(), ff.data());
      for (auto& z : ff) z = Real(0.5) * z * (Real{1} + std::tanh(Real(0.7978845608028654) * (z + Real(0.044715) * z * z * z)));
      Linear(L.fc2, ff.data(), proj.data());
      for (std::size_t i = 0; i < d; ++i) x[i] += proj[i];
    }
    Norm(x.data(), p_.final_gain(), p_.final_bias(), h.data());
    std::vector<Real> logits(static_cast<std::size_t>(c_.vocab_size));
    Linear(p_.head(), h.data(), logits.data());
    ++len_;
    return logits;
  }

  std::size_t length() const { return len_; }

 private:
  void Norm(const Real* x, std::size_t gain, std::size_t bias, Real* y) const {
    const auto d = static_cast<std::size_t>(c_.d_model);
    Real mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += x[i];
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (x[i] - mu) * (x[i] - mu);
    var /= static_cast<Real>(d);
    const Real rs = Real{1} / std::sqrt(var + kLayerNormEps);
    for (std::size_t i = 0; i < d; ++i) y[i] = (x[i] - mu) * rs * p_.data[gain + i] + p_.data[bias + i];
  }

  void Linear(const LinearMap& m, const Real* x, Real* y) const {
    kernels::GemmNT<Real>(kernels::Mat<const Real>{x, 1, m.in, m.in},
                          kernels::Mat<const Real>{p_.data.data() + m.weight, m.out, m.in, m.in},
                          MakeMat(y, 1, m.out), Real{1}, false);
    for (std::size_t o = 0; o < m.out; ++o) y[o] += p_.data[m.bias + o];
  }

  const ModelParams& p_;
  const ModelConfig& c_;
  std::vector<std::vector<Real>> k_, v_;
  std::size_t len_ = 0;
};

TokenId Pick(const std::vector<Real>& logits, const GenerationConfig& config, Rng& rng) {
  if (config.mode == GenerationConfig::Mode::kGreedy) {
    return static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  std::vector<Real> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = logits[i] / static_cast<Real>(config.temperature);
  const Real lse = LogSumExp(scaled.data(), scaled.size());
  std::vector<double> probs(scaled.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) probs[i] = std::exp(static_cast<double>(scaled[i] - lse));
  return static_cast<TokenId>(rng.Weighted(probs));
}

}  // namespace

std::vector<TokenId> GenerateIds(const ModelParams& params, const LoraAdapter* adapter,
                                 const std::vector<TokenId>& prompt, const GenerationConfig& config,
                                 const Tokenizer* tokenizer) {
  config.Validate();
  if (prompt.empty()) throw ContractError("generate: prompt is empty");
  const ModelParams merged = adapter != nullptr ? MergeAdapter(params, *adapter) : ModelParams();
  const ModelParams& p = adapter != nullptr ? merged : params;
  const auto ctx = static_cast<std::size_t>(p.config().context_length);
  const std::size_t room = std::min<std::size_t>(static_cast<std::size_t>(config.max_new_tokens), ctx / 2);
  const std::size_t keep = std::min(prompt.size(), ctx - room);
  const std::vector<TokenId> head_cut(prompt.end() - static_cast<std::ptrdiff_t>(keep), prompt.end());

  Rng rng(config.seed);
  Decoder dec(p);
  std::vector<Real> logits = dec.Prefill(head_cut);
  std::vector<TokenId> out;
  while (true) {
    const TokenId next = Pick(logits, config, rng);
    if (next == Tokenizer::kEos) break;
    if (config.stop_at_newline && tokenizer != nullptr && tokenizer->IsNewline(next)) break;
    out.push_back(next);
    if (static_cast<std::int64_t>(out.size()) >= config.max_new_tokens || dec.length() >= ctx) break;
    logits = dec.Step(next);
  }
  return out;
}

std::string Generate(const ModelParams& params, const LoraAdapter* adapter, const Tokenizer& tokenizer,
                     const std::string& prompt_text, const GenerationConfig& config) {
  return tokenizer.Decode(GenerateIds(params, adapter, PromptIds(tokenizer, prompt_text), config, &tokenizer));
}

}  // namespace toxq::lm
