// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/training/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "toxq/common/errors.hpp"
#include "toxq/common/rng.hpp"

namespace toxq::training {

namespace {

constexpr std::uint64_t kShuffleSalt = 0x5f1e;
constexpr std::uint64_t kAdapterSalt = 0xada7;
constexpr std::uint64_t kPretrainStage = 1, kSftStage = 2, kDpoStage = 3;

template <typename T>
T Get(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("train config: bad value for ") + key);
  }
}

std::size_t Context(const lm::ModelParams& params, const TrainConfig& config) {
  return static_cast<std::size_t>(std::min<std::int64_t>(config.cutoff, params.config().context_length));
}

void CheckIds(std::span<const lm::TokenId> ids, std::int64_t vocab, std::size_t record, const char* what) {
  if (ids.empty()) throw ValidationError("record " + std::to_string(record) + ": empty " + what);
  for (auto id : ids) {
    if (id < 0 || id >= vocab) {
      throw ValidationError("record " + std::to_string(record) + ": token id " + std::to_string(id) +
                            " outside vocabulary of " + std::to_string(vocab));
    }
  }
}

PackedSequence PackChecked(std::span<const lm::TokenId> prompt, std::span<const lm::TokenId> label,
                           std::size_t context, std::size_t record) {
  try {
    return lm::Pack(prompt, label, context);
  } catch (const ValidationError& e) {
    throw ValidationError("record " + std::to_string(record) + ": " + e.what());
  }
}

// Epoch-major list of batches, each a list of record indices.
std::vector<std::vector<std::size_t>> EpochBatches(std::size_t n, std::int64_t batch_size, std::uint64_t seed,
                                                   std::uint64_t stage, std::int64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::Derive(seed, kShuffleSalt + (stage << 16), static_cast<std::uint64_t>(epoch));
  rng.Shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t i = 0; i < n; i += bs) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + bs)));
  }
  return batches;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (!(beta > 0)) throw ConfigError("beta must be > 0");
  if (!(gamma >= 0)) throw ConfigError("gamma must be >= 0");
  if (sft_epochs < 0) throw ConfigError("sft_epochs must be >= 0");
  if (dpo_epochs < 0) throw ConfigError("dpo_epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cutoff < 2) throw ConfigError("cutoff must be >= 2");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
  if (lora_rank < 1) throw ConfigError("lora_rank must be >= 1");
  if (!(lora_alpha > 0)) throw ConfigError("lora_alpha must be > 0");
}

AdamWConfig TrainConfig::Optimizer() const {
  AdamWConfig c;
  c.learning_rate = learning_rate;
  c.weight_decay = weight_decay;
  return c;
}

Json TrainConfig::ToJson() const {
  return Json{{"learning_rate", learning_rate}, {"sft_epochs", sft_epochs}, {"dpo_epochs", dpo_epochs},
              {"beta", beta},                   {"gamma", gamma},           {"batch_size", batch_size},
              {"seed", seed},                   {"cutoff", cutoff},         {"weight_decay", weight_decay},
              {"lora_rank", lora_rank},         {"lora_alpha", lora_alpha}};
}

TrainConfig TrainConfig::FromJson(const Json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  c.learning_rate = Get(j, "learning_rate", c.learning_rate);
  c.sft_epochs = Get(j, "sft_epochs", c.sft_epochs);
  c.dpo_epochs = Get(j, "dpo_epochs", c.dpo_epochs);
  c.beta = Get(j, "beta", c.beta);
  c.gamma = Get(j, "gamma", c.gamma);
  c.batch_size = Get(j, "batch_size", c.batch_size);
  c.seed = Get(j, "seed", c.seed);
  c.cutoff = Get(j, "cutoff", c.cutoff);
  c.weight_decay = Get(j, "weight_decay", c.weight_decay);
  c.lora_rank = Get(j, "lora_rank", c.lora_rank);
  c.lora_alpha = Get(j, "lora_alpha", c.lora_alpha);
  c.Validate();
  return c;
}

SftExample Encode(const lm::Tokenizer& tok, const datasets::SftRecord& record) {
  return SftExample{lm::PromptIds(tok, record.instruction + record.input), lm::LabelIds(tok, record.output)};
}

PreferenceExample Encode(const lm::Tokenizer& tok, const datasets::PreferenceRecord& record) {
  return PreferenceExample{lm::PromptIds(tok, record.system + record.question), lm::LabelIds(tok, record.answer[0]),
                           lm::LabelIds(tok, record.answer[1])};
}

Json EpochLog::ToJson() const {
  return Json{{"stage", stage}, {"epoch", epoch}, {"step", step}, {"loss", loss}, {"margin", margin}, {"seed", seed}};
}

std::vector<EpochLog> Pretrain(lm::ModelParams& params, std::span<const std::vector<lm::TokenId>> texts,
                               std::int64_t epochs, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (texts.empty()) throw ValidationError("pretrain: empty dataset");
  const auto vocab = params.config().vocab_size;
  const std::size_t context = Context(params, config);
  const std::vector<lm::TokenId> bos{lm::Tokenizer::kBos};
  std::vector<PackedSequence> seqs;
  seqs.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    CheckIds(texts[i], vocab, i, "text");
    std::vector<lm::TokenId> label(texts[i].begin(), texts[i].end());
    if (label.size() + 1 > context) label.resize(context - 1);
    label.push_back(lm::Tokenizer::kEos);
    seqs.push_back(PackChecked(bos, label, context, i));
  }
  const auto blocks = BaseBlocks(params);
  OptimizerState state;
  std::vector<EpochLog> logs;
  for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
    double total = 0.0;
    std::size_t n_batches = 0;
    for (const auto& idx : EpochBatches(seqs.size(), config.batch_size, config.seed, kPretrainStage, epoch)) {
      std::vector<PackedSequence> batch;
      for (auto i : idx) batch.push_back(seqs[i]);
      Gradients g;
      g.base.assign(params.data.size(), Real{0});
      total += SftLoss(params, nullptr, batch, &g).loss;
      ++n_batches;
      AdamWStep(state, params.data, g.base, config.Optimizer(), blocks);
    }
    EpochLog log{"pretrain", epoch, state.step, total / static_cast<double>(n_batches), 0.0, config.seed};
    if (on_epoch) on_epoch(log);
    logs.push_back(log);
  }
  return logs;
}

AdapterResult TrainSft(const lm::ModelParams& base, std::span<const SftExample> data, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  config.Validate();
  if (data.empty()) throw ValidationError("train_sft: empty dataset");
  const auto vocab = base.config().vocab_size;
  const std::size_t context = Context(base, config);
  std::vector<PackedSequence> seqs;
  seqs.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CheckIds(data[i].prompt, vocab, i, "prompt");
    CheckIds(data[i].label, vocab, i, "label");
    seqs.push_back(PackChecked(data[i].prompt, data[i].label, context, i));
  }
  AdapterResult result;
  result.adapter = lm::LoraAdapter::Create(base, config.lora_rank, config.lora_alpha,
                                           Rng::Derive(config.seed, kAdapterSalt, 0).Next());
  const auto blocks = AdapterBlocks(result.adapter);
  OptimizerState state;
  for (std::int64_t epoch = 0; epoch < config.sft_epochs; ++epoch) {
    double total = 0.0;
    std::size_t n_batches = 0;
    for (const auto& idx : EpochBatches(seqs.size(), config.batch_size, config.seed, kSftStage, epoch)) {
      std::vector<PackedSequence> batch;
      for (auto i : idx) batch.push_back(seqs[i]);
      Gradients g;
      g.adapter.assign(result.adapter.data.size(), Real{0});
      total += SftLoss(base, &result.adapter, batch, &g).loss;
      ++n_batches;
      AdamWStep(state, result.adapter.data, g.adapter, config.Optimizer(), blocks);
    }
    EpochLog log{"sft", epoch, state.step, total / static_cast<double>(n_batches), 0.0, config.seed};
    if (on_epoch) on_epoch(log);
    result.logs.push_back(log);
  }
  return result;
}

AdapterResult TrainDpo(const lm::ModelParams& reference, std::span<const PreferenceExample> data,
                       const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (data.empty()) throw ValidationError("train_dpo: empty dataset");
  const auto vocab = reference.config().vocab_size;
  const std::size_t context = Context(reference, config);
  std::vector<PreferencePair> pairs;
  pairs.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CheckIds(data[i].prompt, vocab, i, "prompt");
    CheckIds(data[i].chosen, vocab, i, "preferred response");
    CheckIds(data[i].rejected, vocab, i, "dispreferred response");
    if (data[i].chosen == data[i].rejected) {
      throw ValidationError("record " + std::to_string(i) + ": preferred and dispreferred responses are identical");
    }
    PreferencePair p;
    p.chosen = PackChecked(data[i].prompt, data[i].chosen, context, i);
    p.rejected = PackChecked(data[i].prompt, data[i].rejected, context, i);
    pairs.push_back(std::move(p));
  }
  ComputeReference(reference, nullptr, pairs);

  AdapterResult result;
  result.adapter = lm::LoraAdapter::Create(reference, config.lora_rank, config.lora_alpha,
                                           Rng::Derive(config.seed, kAdapterSalt, 1).Next());
  const auto blocks = AdapterBlocks(result.adapter);
  OptimizerState state;
  for (std::int64_t epoch = 0; epoch < config.dpo_epochs; ++epoch) {
    double total = 0.0, margin = 0.0;
    std::size_t n_batches = 0;
    for (const auto& idx : EpochBatches(pairs.size(), config.batch_size, config.seed, kDpoStage, epoch)) {
      std::vector<PreferencePair> batch;
      for (auto i : idx) batch.push_back(pairs[i]);
      Gradients g;
      g.adapter.assign(result.adapter.data.size(), Real{0});
      const LossValue v = CombinedLoss(reference, &result.adapter, batch, config.beta, config.gamma, &g);
      total += v.loss;
      margin += v.margin;
      ++n_batches;
      AdamWStep(state, result.adapter.data, g.adapter, config.Optimizer(), blocks);
    }
    const auto nb = static_cast<double>(n_batches);
    EpochLog log{"dpo", epoch, state.step, total / nb, margin / nb, config.seed};
    if (on_epoch) on_epoch(log);
    result.logs.push_back(log);
  }
  return result;
}

}  // namespace toxq::training
