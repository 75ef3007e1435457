// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "lm_oracle.hpp"
#include "toxq/common/errors.hpp"
#include "toxq/common/rng.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/corpus/corpus.hpp"
#include "toxq/lm/checkpoint.hpp"
#include "toxq/lm/generate.hpp"
#include "toxq/lm/model.hpp"
#include "toxq/lm/tokenizer.hpp"
#include "toxq/lm/transformer.hpp"

using namespace toxq;
using namespace toxq::lm;

namespace {

ModelConfig Tiny(std::int64_t vocab = 11) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.n_layers = 2;
  c.d_model = 8;
  c.n_heads = 2;
  c.context_length = 16;
  return c;
}

// Init draws tiny weights; widen them so every path carries signal.
ModelParams Noisy(const ModelConfig& c, std::uint64_t seed, double scale = 0.4) {
  ModelParams p(c);
  Rng rng(seed);
  for (auto& x : p.data) x = static_cast<Real>(rng.Normal(0.0, scale));
  return p;
}

LoraAdapter NoisyAdapter(const ModelParams& p, std::uint64_t seed) {
  LoraAdapter a = LoraAdapter::Create(p, 2, 4.0, seed);
  Rng rng(seed + 1);
  for (auto& x : a.data) x = static_cast<Real>(rng.Normal(0.0, 0.3));
  return a;
}

PackedSequence Seq(std::vector<TokenId> prompt, std::vector<TokenId> label, std::size_t ctx = 16) {
  return Pack(prompt, label, ctx);
}

}  // namespace

TEST_CASE("tokenizer round trips and vocabulary census") {
  corpus::CorpusConfig cfg;
  cfg.n_items = 500;
  const auto c = corpus::GenerateCorpus(cfg);
  std::vector<std::string> texts;
  std::set<char32_t> chars;
  for (const auto& it : c.items) {
    texts.push_back(it.text);
    for (char32_t ch : utf8::Decode(it.text)) chars.insert(ch);
  }
  const auto tok = Tokenizer::Build(texts);
  CHECK(tok.size() == chars.size() + 4);
  CHECK(tok.Encode("").empty());
  CHECK(tok.Decode(std::vector<TokenId>{}).empty());
  for (const auto& t : texts) CHECK(tok.Decode(tok.Encode(t)) == t);
  const auto p = PromptIds(tok, texts[0]);
  CHECK(p.front() == Tokenizer::kBos);
  CHECK(p.back() == Tokenizer::kSep);
  CHECK(LabelIds(tok, texts[0]).back() == Tokenizer::kEos);
}

TEST_CASE("forced token with a one-word vocabulary") {
  const ModelParams p = Noisy(Tiny(1), 3);
  Workspace ws;
  std::vector<Real> per_token;
  LabelLogProb(p, nullptr, Seq({0, 0}, {0, 0, 0}), ws, &per_token);
  REQUIRE(per_token.size() == 3);
  for (Real v : per_token) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("zero output head gives uniform log-probabilities") {
  ModelParams p = Noisy(Tiny(), 4);
  const auto& head = p.head();
  std::fill(p.data.begin() + static_cast<std::ptrdiff_t>(head.weight),
            p.data.begin() + static_cast<std::ptrdiff_t>(head.weight + head.in * head.out), Real{0});
  std::fill(p.data.begin() + static_cast<std::ptrdiff_t>(head.bias),
            p.data.begin() + static_cast<std::ptrdiff_t>(head.bias + head.out), Real{0});
  Workspace ws;
  std::vector<Real> per_token;
  LabelLogProb(p, nullptr, Seq({1, 5, 3}, {6, 7, 2}), ws, &per_token);
  for (Real v : per_token) CHECK(std::abs(v + std::log(11.0)) < 1e-12);
}

TEST_CASE("forward pass matches the plain reimplementation") {
  const ModelParams p = Noisy(Tiny(), 5);
  const LoraAdapter a = NoisyAdapter(p, 6);
  const auto seq = Seq({1, 4, 9}, {5, 10, 2, 7});  // six input tokens
  REQUIRE(seq.inputs.size() == 6);
  for (const LoraAdapter* ad : {static_cast<const LoraAdapter*>(nullptr), &a}) {
    Workspace ws;
    std::vector<Real> got;
    LabelLogProb(p, ad, seq, ws, &got);
    const auto want = oracle::PlainModel(p, ad).TargetLogProbs(seq);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
    const auto logits = oracle::PlainModel(p, ad).Logits(seq.inputs);
    for (std::size_t t = 0; t < seq.inputs.size(); ++t) {
      for (std::size_t v = 0; v < 11; ++v) CHECK(std::abs(ws.logits[t * 11 + v] - logits[t][v]) < 1e-10);
    }
  }
}

TEST_CASE("softmax rows normalize") {
  const ModelParams p = Noisy(Tiny(), 7);
  Workspace ws;
  Forward(p, nullptr, std::vector<TokenId>{1, 2, 3, 4, 5}, ws);
  for (std::size_t t = 0; t < 5; ++t) {
    const Real* row = ws.logits.data() + t * 11;
    const Real lse = LogSumExp(row, 11);
    double s = 0;
    for (std::size_t v = 0; v < 11; ++v) s += std::exp(row[v] - lse);
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("causality: later label tokens never move earlier log-probabilities") {
  const ModelParams p = Noisy(Tiny(), 8);
  const std::vector<TokenId> prompt{1, 4, 3};
  const std::vector<TokenId> label{5, 6, 7, 8, 2};
  Workspace ws;
  std::vector<Real> base;
  LabelLogProb(p, nullptr, Seq(prompt, label), ws, &base);
  for (std::size_t t = 0; t < label.size(); ++t) {
    auto changed = label;
    changed[t] = changed[t] == 9 ? 10 : 9;
    std::vector<Real> got;
    LabelLogProb(p, nullptr, Seq(prompt, changed), ws, &got);
    for (std::size_t s = 0; s < t; ++s) CHECK(got[s] == base[s]);
  }
}

TEST_CASE("fresh adapter is the identity; merged equals adapted") {
  const ModelParams p = Noisy(Tiny(), 9);
  const LoraAdapter fresh = LoraAdapter::Create(p, 4, 8.0, 1);
  const std::vector<TokenId> toks{1, 5, 6, 7, 3, 9};
  Workspace a, b;
  Forward(p, nullptr, toks, a);
  Forward(p, &fresh, toks, b);
  for (std::size_t i = 0; i < a.logits.size(); ++i) CHECK(std::abs(a.logits[i] - b.logits[i]) < 1e-12);

  const LoraAdapter trained = NoisyAdapter(p, 10);
  const ModelParams merged = MergeAdapter(p, trained);
  Forward(p, &trained, toks, a);
  Forward(merged, nullptr, toks, b);
  for (std::size_t i = 0; i < a.logits.size(); ++i) CHECK(std::abs(a.logits[i] - b.logits[i]) < 1e-10);
}

TEST_CASE("adapter parameter census on the default config") {
  ModelConfig c;
  c.vocab_size = 300;
  const ModelParams p(c);
  const auto a = LoraAdapter::Create(p, 8, 16.0, 0);
  const std::size_t d = 128, f = 512, v = 300, r = 8;
  // Per layer: q, k, v, o (d -> d), fc1 (d -> f), fc2 (f -> d); then the head.
  const std::size_t per_layer = 4 * r * (d + d) + r * (d + f) + r * (f + d);
  CHECK(a.ParamCount() == 4 * per_layer + r * (d + v));
  CHECK(a.targets().size() == 4 * 6 + 1);
}

TEST_CASE("greedy generation") {
  const ModelParams p = Noisy(Tiny(), 12, 0.6);
  GenerationConfig g;
  g.max_new_tokens = 5;
  const std::vector<TokenId> prompt{1, 4, 5, 3};
  const auto first = GenerateIds(p, nullptr, prompt, g);
  for (int i = 0; i < 10; ++i) CHECK(GenerateIds(p, nullptr, prompt, g) == first);

  Workspace ws;
  Forward(p, nullptr, prompt, ws);
  const Real* last = ws.logits.data() + (prompt.size() - 1) * 11;
  const auto argmax = static_cast<TokenId>(std::max_element(last, last + 11) - last);
  if (argmax == Tokenizer::kEos) {
    CHECK(first.empty());
  } else {
    REQUIRE_FALSE(first.empty());
    CHECK(first[0] == argmax);
    g.max_new_tokens = 1;
    CHECK(GenerateIds(p, nullptr, prompt, g).size() == 1);
  }
  g.max_new_tokens = 0;
  CHECK_THROWS_AS(GenerateIds(p, nullptr, prompt, g), ConfigError);
}

TEST_CASE("sampling is seeded") {
  const ModelParams p = Noisy(Tiny(), 13, 0.6);
  GenerationConfig g;
  g.mode = GenerationConfig::Mode::kSample;
  g.max_new_tokens = 6;
  g.seed = 4;
  const std::vector<TokenId> prompt{1, 4};
  CHECK(GenerateIds(p, nullptr, prompt, g) == GenerateIds(p, nullptr, prompt, g));
}

TEST_CASE("packing truncates the prompt head and keeps the label") {
  const std::vector<TokenId> prompt{1, 4, 5, 6, 7, 8, 3};
  const std::vector<TokenId> label{9, 10, 2};
  const auto s = Pack(prompt, label, 6);
  CHECK(s.inputs.size() == 6);
  CHECK(s.dropped == 3);
  CHECK(s.n_targets == 3);
  CHECK(s.inputs == std::vector<TokenId>{6, 7, 8, 3, 9, 10});
  CHECK(s.targets == std::vector<TokenId>{-1, -1, -1, 9, 10, 2});
  CHECK_THROWS_AS(Pack(prompt, std::vector<TokenId>(7, 4), 6), ValidationError);
}

TEST_CASE("checkpoints round trip and bind adapters to their base") {
  const auto dir = std::filesystem::temp_directory_path() / "toxq_test_lm";
  std::filesystem::create_directories(dir);
  const ModelParams p = Noisy(Tiny(), 14);
  const auto tok = Tokenizer::Build({"abcdefg"});
  SaveBase((dir / "base.ckpt").string(), p, tok, Json{{"note", 1}});
  const auto back = LoadBase((dir / "base.ckpt").string());
  CHECK(back.params.data == p.data);
  CHECK(back.params.config() == p.config());
  CHECK(back.tokenizer.chars() == tok.chars());
  CHECK(ContentHash(back.params) == ContentHash(p));

  const LoraAdapter a = NoisyAdapter(p, 15);
  SaveAdapter((dir / "a.ckpt").string(), a, p);
  CHECK(LoadAdapter((dir / "a.ckpt").string(), p).adapter.data == a.data);
  const ModelParams other = Noisy(Tiny(), 16);
  CHECK_THROWS_AS(LoadAdapter((dir / "a.ckpt").string(), other), ValidationError);
  std::filesystem::remove_all(dir);
}
