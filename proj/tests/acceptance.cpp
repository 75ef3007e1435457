// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion on stdout, details and
// the benchmark table on stderr. Exit status 0 only when every line passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "toxq/common/errors.hpp"
#include "toxq/common/rng.hpp"
#include "toxq/common/utf8.hpp"
#include "toxq/datasets/prompt.hpp"
#include "toxq/lm/tokenizer.hpp"
#include "toxq/orchestration/pipeline.hpp"
#include "toxq/training/gradcheck.hpp"
#include "toxq/training/losses.hpp"

using namespace toxq;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failed = 0;

double Seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

void Report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  g_failed += pass ? 0 : 1;
}

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

lm::ModelParams RandomModel(const lm::ModelConfig& cfg, std::uint64_t seed) {
  lm::ModelParams p = lm::ModelParams::Init(cfg, seed);
  Rng rng(seed + 1);
  for (auto& x : p.data) x += static_cast<Real>(rng.Normal(0.0, 0.1));
  return p;
}

std::vector<lm::TokenId> Ids(Rng& rng, std::size_t n, std::int64_t vocab) {
  std::vector<lm::TokenId> out(n);
  for (auto& t : out) t = static_cast<lm::TokenId>(rng.Range(lm::Tokenizer::kNumSpecial, vocab - 1));
  return out;
}

std::vector<training::PreferencePair> RandomPairs(Rng& rng, std::size_t n, std::int64_t vocab, std::int64_t ctx) {
  std::vector<training::PreferencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto prompt = Ids(rng, static_cast<std::size_t>(rng.Range(3, 20)), vocab);
    auto chosen = Ids(rng, static_cast<std::size_t>(rng.Range(1, 10)), vocab);
    auto rejected = Ids(rng, static_cast<std::size_t>(rng.Range(1, 10)), vocab);
    if (chosen == rejected) rejected.push_back(lm::Tokenizer::kNumSpecial);
    out.push_back({lm::Pack(prompt, chosen, ctx), lm::Pack(prompt, rejected, ctx)});
  }
  return out;
}

void LossCorrectness() {
  const auto start = Clock::now();
  lm::ModelConfig cfg;
  cfg.vocab_size = 300;
  cfg.n_layers = 2;
  cfg.d_model = 32;
  cfg.n_heads = 4;
  cfg.context_length = 64;
  double dpo_err = 0.0, sft_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto p = RandomModel(cfg, seed);
    const auto fresh = lm::LoraAdapter::Create(p, 4, 8.0, seed);
    const auto pairs = RandomPairs(rng, 8, cfg.vocab_size, cfg.context_length);
    const auto v = training::DpoLoss(p, &fresh, p, nullptr, pairs, 0.1);
    dpo_err = std::max(dpo_err, std::abs(v.loss - std::log(2.0)));

    lm::ModelParams uniform = p;
    const auto& head = uniform.head();
    std::fill(uniform.data.begin() + static_cast<std::ptrdiff_t>(head.weight),
              uniform.data.begin() + static_cast<std::ptrdiff_t>(head.weight + head.in * head.out), Real(0));
    std::fill(uniform.data.begin() + static_cast<std::ptrdiff_t>(head.bias),
              uniform.data.begin() + static_cast<std::ptrdiff_t>(head.bias + head.out), Real(0));
    const std::size_t t = 7;
    std::vector<lm::PackedSequence> batch;
    for (int i = 0; i < 4; ++i) {
      batch.push_back(lm::Pack(Ids(rng, 5, cfg.vocab_size), Ids(rng, t, cfg.vocab_size), cfg.context_length));
    }
    const double want = static_cast<double>(t) * std::log(static_cast<double>(cfg.vocab_size));
    sft_err = std::max(sft_err, std::abs(training::SftLoss(uniform, nullptr, batch).loss - want));
  }
  const double secs = Seconds(start);
  Report(1, "loss correctness", dpo_err < 1e-12 && sft_err < 1e-10 && secs < 1.0,
         Fmt("|dpo - ln2| max %.2e (< 1e-12), |sft - T ln|V|| max %.2e (< 1e-10), %.3f s (< 1 s)", dpo_err, sft_err,
             secs));
}

void GradientFidelity() {
  const auto start = Clock::now();
  lm::ModelConfig cfg;
  cfg.vocab_size = 16;
  cfg.n_layers = 2;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.context_length = 32;
  const auto p = RandomModel(cfg, 11);
  auto adapter = lm::LoraAdapter::Create(p, 2, 4.0, 12);
  Rng rng(13);
  for (auto& x : adapter.data) x = static_cast<Real>(rng.Normal(0.0, 0.2));
  auto pairs = RandomPairs(rng, 3, cfg.vocab_size, cfg.context_length);
  training::ComputeReference(p, nullptr, pairs);
  std::vector<lm::PackedSequence> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(lm::Pack(Ids(rng, 4, 16), Ids(rng, 3, 16), cfg.context_length));
  double worst = 0.0;
  std::string detail;
  for (auto [obj, name] : {std::pair{training::Objective::kSft, "sft"},
                           {training::Objective::kDpo, "dpo"},
                           {training::Objective::kCombined, "combined"}}) {
    const auto r = training::AdapterGradCheck(obj, p, adapter, batch, pairs, 0.5, 1.0);
    worst = std::max(worst, r.max_relative_error);
    detail += Fmt("%s %.2e over %zu params, ", name, r.max_relative_error, r.checked);
  }
  const double secs = Seconds(start);
  Report(2, "gradient fidelity", worst < 1e-4 && secs < 120.0, detail + Fmt("%.2f s (< 120 s)", secs));
}

void RetrievalEquivalence() {
  const auto start = Clock::now();
  corpus::CorpusConfig cfg;
  cfg.seed = 42;
  const auto c = corpus::GenerateCorpus(cfg);
  auto index = searchsim::InvertedIndex::Build(c, searchsim::RiskScorer::Fit(c.items));
  Rng rng(43);
  std::set<corpus::ItemId> removed;
  for (int i = 0; i < 100; ++i) {
    const auto id = c.items[rng.Index(c.items.size())].id;
    index.Remove(id);
    removed.insert(id);
  }
  std::vector<std::string> normalized;
  for (const auto& item : c.items) normalized.push_back(searchsim::NormalizeUtf8(item.text));
  const auto view = index.View();
  std::size_t mismatches = 0, queries = 0;
  while (queries < 1000) {
    std::string q;
    if (rng.Bernoulli(0.05)) {
      q = "Zq" + std::to_string(rng.Index(1000));
    } else {
      const auto text = utf8::Decode(c.items[rng.Index(c.items.size())].text);
      const auto len = std::min<std::size_t>(text.size(), static_cast<std::size_t>(rng.Range(1, 8)));
      q = utf8::Encode(text.substr(rng.Index(text.size() - len + 1), len));
    }
    const std::string nq = searchsim::NormalizeUtf8(q);
    if (nq.empty()) continue;
    ++queries;
    std::set<corpus::ItemId> want;
    for (std::size_t i = 0; i < c.items.size(); ++i) {
      if (!removed.contains(c.items[i].id) && normalized[i].find(nq) != std::string::npos) want.insert(c.items[i].id);
    }
    const auto got = view.Search(q, c.items.size()).ranked_ids;
    if (std::set<corpus::ItemId>(got.begin(), got.end()) != want || got.size() != want.size()) ++mismatches;
  }
  const double secs = Seconds(start);
  Report(3, "retrieval oracle equivalence", mismatches == 0 && secs < 60.0,
         Fmt("%zu of %zu queries differ from a linear scan over %zu items, %.1f s (< 60 s)", mismatches, queries,
             c.items.size(), secs));
}

// Independent recomputation of (hit, toxic) over the top 100 of a linear scan.
class Rescan {
 public:
  explicit Rescan(const searchsim::InvertedIndex& index) {
    const auto tombs = index.Tombstones();
    const std::set<corpus::ItemId> removed(tombs.begin(), tombs.end());
    for (const auto& item : index.core().docs) {
      if (removed.contains(item.id)) continue;
      docs_.push_back({searchsim::NormalizeUtf8(item.text), searchsim::RiskScore(item, index.core().scorer), item.id,
                       item.is_toxic});
    }
  }
  std::pair<std::int64_t, std::int64_t> Count(const std::string& query) const {
    const std::string q = searchsim::NormalizeUtf8(query);
    std::vector<const Doc*> hits;
    for (const auto& d : docs_) {
      if (!q.empty() && d.text.find(q) != std::string::npos) hits.push_back(&d);
    }
    std::sort(hits.begin(), hits.end(),
              [](const Doc* a, const Doc* b) { return a->score != b->score ? a->score > b->score : a->id < b->id; });
    if (hits.size() > 100) hits.resize(100);
    std::int64_t toxic = 0;
    for (const Doc* d : hits) toxic += d->toxic ? 1 : 0;
    return {static_cast<std::int64_t>(hits.size()), toxic};
  }

 private:
  struct Doc {
    std::string text;
    double score;
    corpus::ItemId id;
    bool toxic;
  };
  std::vector<Doc> docs_;
};

std::size_t BoundaryViolations() {
  // Twenty hits, one of them toxic: rate exactly 1/20.
  std::vector<corpus::Item> items;
  for (int i = 0; i < 20; ++i) {
    corpus::Item it;
    it.id = i;
    it.text = "界线" + std::to_string(i);
    it.is_toxic = i == 0;
    if (it.is_toxic) it.campaign_id = 0;
    items.push_back(it);
  }
  for (int i = 20; i < 22; ++i) {
    corpus::Item it;
    it.id = i;
    it.text = "好词" + std::to_string(i);
    it.is_toxic = true;
    it.campaign_id = 0;
    items.push_back(it);
  }
  const auto index = searchsim::InvertedIndex::Build(items, searchsim::RiskScorer::FromWeights({}));
  datasets::Group g;
  g.members = {datasets::AnnotatedPair{20, 0, items[20].text, "界线", 0, 2},
               datasets::AnnotatedPair{21, 0, items[21].text, "好词", 0, 2}};
  const auto t = datasets::BuildPreferenceDataset({g}, index.View(), 0.05, 20, 1);
  std::size_t bad = 0;
  if (t.size() != 1) return 1;
  bad += t[0].preferred.size() == 1 && t[0].preferred[0].keyword == "好词" ? 0 : 1;
  bad += t[0].dispreferred.size() == 1 && t[0].dispreferred[0].keyword == "界线" ? 0 : 1;
  return bad;
}

void DatasetPredicates(const orchestration::PipelineConfig& config, const orchestration::PipelineResult& result) {
  const auto start = Clock::now();
  std::size_t candidates = 0, admission_bad = 0, keywords = 0, partition_bad = 0, monotone_bad = 0;
  std::string counts;
  for (const auto& s : result.seeds) {
    const fs::path corpus_dir = s.dir / "corpus";
    const auto corpus = corpus::ReadCorpus((corpus_dir / "history").string());
    const auto reports = corpus::ReadReports((corpus_dir / "history_reports.jsonl").string());
    const auto index = searchsim::InvertedIndex::Load((s.dir / "index" / "history.index").string());
    const Rescan scan(index);

    std::vector<std::pair<corpus::ItemId, std::string>> expected;
    for (const auto& r : reports) {
      for (const auto& k : r.oracle_keywords) {
        ++candidates;
        const auto len = static_cast<std::int64_t>(utf8::Length(k));
        const auto [hit, toxic] = scan.Count(k);
        if (len >= 2 && (hit > 0 || len <= 10)) expected.emplace_back(r.item_id, k);
      }
    }
    std::vector<std::pair<corpus::ItemId, std::string>> written;
    for (const auto& j : ReadJsonLines(s.dir / "datasets" / "pairs.jsonl")) {
      written.emplace_back(j.at("item_id").get<corpus::ItemId>(), j.at("keyword").get<std::string>());
    }
    for (std::size_t i = 0; i < std::max(expected.size(), written.size()); ++i) {
      if (i >= expected.size() || i >= written.size() || expected[i] != written[i]) ++admission_bad;
    }

    std::size_t n_comp = 0, n_comp2 = 0;
    for (const auto& [file, threshold, n] :
         {std::tuple{"pref.jsonl", config.datasets.threshold, &n_comp},
          std::tuple{"pref_ablation.jsonl", config.datasets.ablation_threshold, &n_comp2}}) {
      for (const auto& j : ReadJsonLines(s.dir / "datasets" / file)) {
        ++*n;
        const auto parsed = datasets::ParsePreference(datasets::PreferenceFromJson(j), config.datasets.language);
        for (const auto& [text, preferred] : {std::pair{parsed.preferred, true}, {parsed.dispreferred, false}}) {
          for (const auto& k : datasets::SplitKeywords(text)) {
            ++keywords;
            const auto [hit, toxic] = scan.Count(k);
            const double rate = hit == 0 ? 0.0 : static_cast<double>(toxic) / static_cast<double>(hit);
            if ((rate > threshold) != preferred) ++partition_bad;
          }
        }
      }
    }
    monotone_bad += n_comp2 >= n_comp ? 0 : 1;
    counts += Fmt("%s%zu/%zu", counts.empty() ? "" : " ", n_comp, n_comp2);
  }
  const std::size_t boundary_bad = BoundaryViolations();
  Report(4, "dataset predicates",
         admission_bad == 0 && partition_bad == 0 && boundary_bad == 0 && monotone_bad == 0,
         Fmt("admission violations %zu over %zu candidates, partition violations %zu over %zu keywords, boundary "
             "violations %zu, D_comp/D_comp2 per seed %s, %.1f s",
             admission_bad, candidates, partition_bad, keywords, boundary_bad, counts.c_str(), Seconds(start)));
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> Rates(const orchestration::PipelineResult& r, const std::string& method) {
  std::vector<double> out;
  for (const auto& s : r.seeds) out.push_back(s.QueryHitRate(method));
  return out;
}

std::string Join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += Fmt("%s%.3f", out.empty() ? "" : " ", x);
  return out;
}

void Benchmark(const orchestration::PipelineConfig& config, const orchestration::PipelineResult& result, double secs) {
  using namespace orchestration;
  const auto sft = Rates(result, kSftOnly);
  const auto qx = Rates(result, kQExplorer);
  const auto comp2 = Rates(result, kQExplorerAblation);
  const auto tfidf = Rates(result, kTfIdf);
  std::vector<double> margins;
  for (const auto& m : result.aggregate.at("dpo_margins").at("mean")) margins.push_back(m.get<double>());
  bool monotone = margins.size() >= 2;
  for (std::size_t i = 1; i < margins.size(); ++i) monotone = monotone && margins[i] > margins[i - 1];
  const bool enough_seeds = result.seeds.size() >= 5;
  Report(5, "QExplorer beats SFT-only", enough_seeds && Mean(qx) > Mean(sft) && monotone && secs < 45 * 60,
         Fmt("mean QHR %.4f vs %.4f over %zu seeds; mean DPO margin per epoch %s (%s); pipeline %.1f min (< 45)",
             Mean(qx), Mean(sft), result.seeds.size(), Join(margins).c_str(),
             monotone ? "increasing" : "not increasing", secs / 60));

  std::size_t wins = 0;
  for (std::size_t i = 0; i < qx.size(); ++i) wins += qx[i] >= tfidf[i] ? 1 : 0;
  const std::size_t need = (4 * qx.size() + 4) / 5;
  Report(6, "QExplorer vs TF-IDF", enough_seeds && wins >= need,
         Fmt("QExplorer >= TF-IDF in %zu of %zu seeds (need %zu); QHR %s vs %s", wins, qx.size(), need,
             Join(qx).c_str(), Join(tfidf).c_str()));

  Report(7, "threshold ablation", enough_seeds && Mean(qx) >= Mean(comp2),
         Fmt("mean QHR D_comp %.4f vs D_comp2 %.4f (per seed %s vs %s)", Mean(qx), Mean(comp2), Join(qx).c_str(),
             Join(comp2).c_str()));
  (void)config;
}

void Determinism(orchestration::PipelineConfig config, const orchestration::PipelineResult& first) {
  const auto start = Clock::now();
  std::size_t differing = 0, compared = 0, not_skipped = 0;
  // Same directory: every stage must be recognized as up to date.
  const auto again = orchestration::RunPipeline(config);
  for (std::size_t s = 0; s < again.seeds.size(); ++s) {
    for (std::size_t i = 0; i < again.seeds[s].stages.size(); ++i) {
      not_skipped += again.seeds[s].stages[i].skipped ? 0 : 1;
      differing += again.seeds[s].stages[i].outputs_hash == first.seeds[s].stages[i].outputs_hash ? 0 : 1;
      ++compared;
    }
  }
  // Fresh directory: every stage of the first seed recomputed from scratch.
  config.seeds = {first.seeds.front().seed};
  config.out_dir = (fs::path(config.out_dir).parent_path() / "rerun").string();
  fs::remove_all(config.out_dir);
  const auto fresh = orchestration::RunPipeline(config);
  std::string which;
  for (std::size_t i = 0; i < fresh.seeds[0].stages.size(); ++i) {
    const auto& a = fresh.seeds[0].stages[i];
    const bool same = a.outputs_hash == first.seeds[0].stages[i].outputs_hash;
    differing += same ? 0 : 1;
    ++compared;
    if (!same) which += " " + a.stage;
  }
  Report(8, "determinism", differing == 0 && not_skipped == 0,
         Fmt("%zu of %zu stage output hashes differ%s; %zu stages rerun although up to date; %.1f s", differing,
             compared, which.c_str(), not_skipped, Seconds(start)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toxq acceptance suite"};
  std::string out = "acceptance-runs";
  std::string config_path;
  app.add_option("--out", out, "Working directory for benchmark runs");
  app.add_option("--config", config_path, "Pipeline config (default benchmark when omitted)");
  CLI11_PARSE(app, argc, argv);

  try {
    LossCorrectness();
    GradientFidelity();
    RetrievalEquivalence();

    orchestration::PipelineConfig config = orchestration::PipelineConfig::Load(config_path);
    config.out_dir = (fs::path(out) / "bench").string();
    fs::remove_all(config.out_dir);
    const auto start = Clock::now();
    const auto result = orchestration::RunPipeline(config, [](const std::string& msg) { std::cerr << msg << '\n'; });
    const double secs = Seconds(start);
    std::cerr << result.aggregate_text;

    DatasetPredicates(config, result);
    Benchmark(config, result, secs);
    Determinism(config, result);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance suite aborted: %s\n", e.what());
    return 2;
  }
  return g_failed == 0 ? 0 : 1;
}
