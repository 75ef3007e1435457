// Copyright 2026 The toxq Authors
// SPDX-License-Identifier: Apache-2.0

#include "toxq/corpus/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string_view>

#include "toxq/common/errors.hpp"
#include "toxq/common/rng.hpp"
#include "toxq/common/utf8.hpp"

namespace toxq::corpus {

namespace {

enum Salt : std::uint64_t {
  kVocabSalt = 0x5601,
  kCampaignSalt = 0x5602,
  kItemSalt = 0x5603,
  kLayoutSalt = 0x5604,
  kOracleSalt = 0x5605,
  kReportSalt = 0x5606,
};

// Character inventory for generated text.
constexpr std::string_view kCharPool =
    "的一是了我不人在他有这个上们来到时大地为子中你说生国年着就那和要她出也得里后自以会家可下而过天去能对小多然于心学么之都好"
    "看起发当没成只如事把还用第样道想作种开美总从无情己面最女但现前些所同日手又行意动方期它头经长儿回位分爱老因很给名法间斯知"
    "世什两次使身者被高已亲其进此话常与活正感见明问力理尔点文几定本公特做外孩相西果走将月十实向声车全信重三机工物气每并别真打"
    "太新比才便夫再书部水像眼等体却加电主界门利海受听表德少克代员许先口由死安写性马光白或住难望教命花结乐色更拉东神记处让母父"
    "应直字场平报友关放至张认接告入笑内英军候民岁往何度山觉路带万男边风解叫任金快原吃妈变通师立象数四失满战远格士音轻目条呢病"
    "始达深完今提求清王化空业思切怎非找片罗钱吗语元喜曾离飞科言干流欢约各即指合反题必该论交终林请医晚制球决传画保读运及则房早";

constexpr int kGlobalWords = 60;
constexpr int kCategoryWords = 40;
constexpr int kDisguiseWords = 4;
constexpr int kMaxResample = 200;

const std::u32string& CharPool() {
  static const std::u32string pool = utf8::Decode(kCharPool);
  return pool;
}

std::string RandomWord(Rng& rng, int length) {
  const auto& pool = CharPool();
  std::u32string w;
  for (int i = 0; i < length; ++i) w.push_back(pool[rng.Index(pool.size())]);
  return utf8::Encode(w);
}

std::vector<double> ZipfWeights(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / static_cast<double>(i + 1);
  return w;
}

struct Vocabulary {
  std::vector<std::string> global;
  std::vector<std::vector<std::string>> by_category;
  std::vector<double> global_weights;
  std::vector<double> category_weights;
};

Vocabulary BuildVocabulary(std::uint64_t seed, int n_categories) {
  Rng rng = Rng::Derive(seed, kVocabSalt);
  std::set<std::string> used;
  auto fresh = [&](int min_len, int max_len) {
    while (true) {
      std::string w = RandomWord(rng, static_cast<int>(rng.Range(min_len, max_len)));
      if (used.insert(w).second) return w;
    }
  };
  Vocabulary v;
  for (int i = 0; i < kGlobalWords; ++i) v.global.push_back(fresh(2, 3));
  v.by_category.resize(static_cast<std::size_t>(n_categories));
  for (auto& words : v.by_category) {
    for (int i = 0; i < kCategoryWords; ++i) words.push_back(fresh(2, 3));
  }
  v.global_weights = ZipfWeights(v.global.size());
  v.category_weights = ZipfWeights(kCategoryWords);
  return v;
}

int SignatureCount(Rng& rng) {
  static constexpr std::array<double, 5> kWeights{0.15, 0.35, 0.30, 0.15, 0.05};
  return 1 + static_cast<int>(rng.Weighted(kWeights));
}

int SignatureLength(Rng& rng) {
  static constexpr std::array<double, 9> kWeights{0.04, 0.22, 0.30, 0.20, 0.10, 0.05, 0.04, 0.03, 0.02};
  return 2 + static_cast<int>(rng.Weighted(kWeights));
}

bool Overlaps(const std::string& a, const std::string& b) {
  return a.find(b) != std::string::npos || b.find(a) != std::string::npos;
}

std::vector<Campaign> BuildCampaigns(const CorpusConfig& config, const Vocabulary& vocab) {
  Rng rng = Rng::Derive(config.seed, kCampaignSalt);
  std::vector<Campaign> campaigns;
  std::vector<std::string> all_phrases;
  for (std::int64_t c = 0; c < config.n_campaigns; ++c) {
    Campaign camp;
    camp.id = c;
    camp.category = static_cast<int>(c % config.n_categories);
    const int n_sig = SignatureCount(rng);
    while (static_cast<int>(camp.signature_phrases.size()) < n_sig) {
      std::string phrase = RandomWord(rng, SignatureLength(rng));
      bool clash = false;
      for (const auto& p : all_phrases) clash = clash || Overlaps(p, phrase);
      for (const auto& w : vocab.global) clash = clash || w.find(phrase) != std::string::npos;
      for (const auto& words : vocab.by_category) {
        for (const auto& w : words) clash = clash || w.find(phrase) != std::string::npos;
      }
      if (clash) continue;
      all_phrases.push_back(phrase);
      camp.signature_phrases.push_back(std::move(phrase));
    }
    // Disguise words are ordinary, frequent marketplace words.
    const auto& cat_words = vocab.by_category[static_cast<std::size_t>(camp.category)];
    while (static_cast<int>(camp.disguise_vocabulary.size()) < kDisguiseWords) {
      const bool from_category = camp.disguise_vocabulary.size() % 2 == 0;
      const std::string& w = from_category ? cat_words[rng.Index(12)] : vocab.global[rng.Index(12)];
      if (std::find(camp.disguise_vocabulary.begin(), camp.disguise_vocabulary.end(), w) ==
          camp.disguise_vocabulary.end()) {
        camp.disguise_vocabulary.push_back(w);
      }
    }
    std::vector<std::string> slots;
    for (std::size_t i = 0; i < camp.signature_phrases.size(); ++i) slots.push_back("{S" + std::to_string(i) + "}");
    slots.emplace_back("{D}");
    slots.emplace_back("{D}");
    const auto n_fill = rng.Range(1, 3);
    for (std::int64_t i = 0; i < n_fill; ++i) slots.emplace_back("{F}");
    rng.Shuffle(std::span<std::string>(slots));
    for (const auto& s : slots) camp.template_text += s;
    campaigns.push_back(std::move(camp));
  }
  return campaigns;
}

std::string FillerWord(Rng& rng, const Vocabulary& vocab, int category) {
  if (rng.Bernoulli(0.6)) {
    const auto& words = vocab.by_category[static_cast<std::size_t>(category)];
    return words[rng.Weighted(vocab.category_weights)];
  }
  return vocab.global[rng.Weighted(vocab.global_weights)];
}

std::string QuantitySuffix(Rng& rng) {
  static constexpr std::array<std::string_view, 5> kUnits{"cm", "CM", "元", "G", "ml"};
  return std::to_string(rng.Range(2, 99)) + std::string(kUnits[rng.Index(kUnits.size())]);
}

std::string FillTemplate(Rng& rng, const Campaign& camp, const Vocabulary& vocab) {
  std::string out;
  const std::string& t = camp.template_text;
  std::size_t i = 0;
  while (i < t.size()) {
    const std::size_t close = t.find('}', i);
    const std::string slot = t.substr(i + 1, close - i - 1);
    if (slot == "D") {
      out += camp.disguise_vocabulary[rng.Index(camp.disguise_vocabulary.size())];
    } else if (slot == "F") {
      out += FillerWord(rng, vocab, camp.category);
    } else {
      out += camp.signature_phrases[static_cast<std::size_t>(std::stoi(slot.substr(1)))];
    }
    i = close + 1;
  }
  if (rng.Bernoulli(0.25)) out += QuantitySuffix(rng);
  return out;
}

std::string NormalText(Rng& rng, const Vocabulary& vocab, int category) {
  std::string out;
  const auto n_words = rng.Range(4, 9);
  for (std::int64_t i = 0; i < n_words; ++i) out += FillerWord(rng, vocab, category);
  if (rng.Bernoulli(0.25)) out += QuantitySuffix(rng);
  return out;
}

struct PhraseOwner {
  std::string phrase;
  CampaignId campaign;
};

bool ContainsForeignPhrase(const std::string& text, const std::vector<PhraseOwner>& phrases,
                           std::optional<CampaignId> own) {
  for (const auto& p : phrases) {
    if (own && p.campaign == *own) continue;
    if (text.find(p.phrase) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::vector<std::int64_t> CampaignSizes(std::int64_t n_toxic, std::int64_t n_campaigns) {
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(n_campaigns), 0);
  if (n_campaigns == 0 || n_toxic == 0) return sizes;
  // Everyone gets one member while supply lasts; the rest follows 1/(rank+1)
  // with largest-remainder rounding.
  std::int64_t left = n_toxic;
  for (auto& s : sizes) {
    if (left == 0) break;
    s = 1;
    --left;
  }
  double total = 0.0;
  for (std::size_t c = 0; c < sizes.size(); ++c) total += 1.0 / static_cast<double>(c + 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t given = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double share = static_cast<double>(left) / (total * static_cast<double>(c + 1));
    const auto whole = static_cast<std::int64_t>(std::floor(share));
    sizes[c] += whole;
    given += whole;
    remainders.emplace_back(share - static_cast<double>(whole), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t i = 0; i < left - given; ++i) sizes[remainders[static_cast<std::size_t>(i)].second] += 1;
  return sizes;
}

void CorpusConfig::Validate() const {
  if (n_items <= 0) throw ConfigError("corpus config: n_items must be > 0");
  if (!(toxic_fraction >= 0.0 && toxic_fraction <= 1.0)) {
    throw ConfigError("corpus config: toxic_fraction must be in [0, 1]");
  }
  if (toxic_fraction > 0.0 && n_campaigns < 1) {
    throw ConfigError("corpus config: n_campaigns must be >= 1 when toxic_fraction > 0");
  }
  if (n_campaigns < 0) throw ConfigError("corpus config: n_campaigns must be >= 0");
  if (n_categories < 1) throw ConfigError("corpus config: n_categories must be >= 1");
  if (!(annotation_noise >= 0.0 && annotation_noise <= 1.0)) {
    throw ConfigError("corpus config: annotation_noise must be in [0, 1]");
  }
  if (period < 0) throw ConfigError("corpus config: period must be >= 0");
}

std::int64_t CorpusConfig::ToxicCount() const {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(n_items) * toxic_fraction));
}

const Item& Corpus::item(ItemId id) const {
  const auto it = item_pos_.find(id);
  if (it == item_pos_.end()) throw NotFoundError("unknown item id " + std::to_string(id));
  return items[it->second];
}

const Campaign& Corpus::campaign(CampaignId id) const {
  const auto it = campaign_pos_.find(id);
  if (it == campaign_pos_.end()) throw NotFoundError("unknown campaign id " + std::to_string(id));
  return campaigns[it->second];
}

std::size_t Corpus::ToxicCount() const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const Item& i) { return i.is_toxic; }));
}

void Corpus::Reindex() {
  item_pos_.clear();
  campaign_pos_.clear();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!item_pos_.emplace(items[i].id, i).second) {
      throw ValidationError("duplicate item id " + std::to_string(items[i].id));
    }
  }
  for (std::size_t i = 0; i < campaigns.size(); ++i) campaign_pos_.emplace(campaigns[i].id, i);
}

Corpus GenerateCorpus(const CorpusConfig& config) {
  config.Validate();
  Corpus corpus;
  corpus.config = config;
  const Vocabulary vocab = BuildVocabulary(config.seed, static_cast<int>(config.n_categories));
  corpus.campaigns = BuildCampaigns(config, vocab);

  std::vector<PhraseOwner> phrases;
  for (const auto& c : corpus.campaigns) {
    for (const auto& p : c.signature_phrases) phrases.push_back({p, c.id});
  }

  const std::int64_t n_toxic = config.ToxicCount();
  std::vector<std::int64_t> order(static_cast<std::size_t>(config.n_items));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int64_t>(i);
  Rng layout = Rng::Derive(config.seed, kLayoutSalt, static_cast<std::uint64_t>(config.period));
  layout.Shuffle(std::span<std::int64_t>(order));
  const std::vector<std::int64_t> sizes = CampaignSizes(n_toxic, config.n_campaigns);
  // toxic_slot[i] = campaign of item i, or -1.
  std::vector<std::int64_t> toxic_slot(order.size(), -1);
  std::size_t k = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::int64_t m = 0; m < sizes[c]; ++m, ++k) {
      toxic_slot[static_cast<std::size_t>(order[k])] = static_cast<std::int64_t>(c);
    }
  }

  corpus.items.reserve(order.size());
  for (std::int64_t idx = 0; idx < config.n_items; ++idx) {
    Rng rng = Rng::Derive(config.seed, kItemSalt + (static_cast<std::uint64_t>(config.period) << 16),
                          static_cast<std::uint64_t>(idx));
    Item item;
    item.id = idx;
    item.created_at = config.period * config.n_items + idx;
    const std::int64_t camp_id = toxic_slot[static_cast<std::size_t>(idx)];
    if (camp_id >= 0) {
      const Campaign& camp = corpus.campaigns[static_cast<std::size_t>(camp_id)];
      item.is_toxic = true;
      item.campaign_id = camp.id;
      item.category = camp.category;
      int tries = 0;
      do {
        item.text = FillTemplate(rng, camp, vocab);
      } while (ContainsForeignPhrase(item.text, phrases, camp.id) && ++tries < kMaxResample);
    } else {
      item.category = static_cast<int>(rng.Index(static_cast<std::uint64_t>(config.n_categories)));
      int tries = 0;
      do {
        item.text = NormalText(rng, vocab, item.category);
      } while (ContainsForeignPhrase(item.text, phrases, std::nullopt) && ++tries < kMaxResample);
    }
    if (ContainsForeignPhrase(item.text, phrases, item.campaign_id)) {
      throw StateError("corpus generation: could not keep signature phrases exclusive");
    }
    corpus.items.push_back(std::move(item));
  }
  corpus.Reindex();
  return corpus;
}

std::vector<std::string> OracleAnnotate(const Item& item, const Campaign& campaign, double noise,
                                        std::uint64_t seed) {
  if (!item.is_toxic || !item.campaign_id || *item.campaign_id != campaign.id) {
    throw ContractError("oracle_annotate: item " + std::to_string(item.id) + " is not a toxic member of campaign " +
                        std::to_string(campaign.id));
  }
  Rng rng = Rng::Derive(seed, kOracleSalt, static_cast<std::uint64_t>(item.id));
  const auto& sig = campaign.signature_phrases;

  auto by_position = [&](std::vector<std::string> kws) {
    std::stable_sort(kws.begin(), kws.end(),
                     [&](const std::string& a, const std::string& b) { return item.text.find(a) < item.text.find(b); });
    return kws;
  };

  if (!rng.Bernoulli(noise)) {
    const std::size_t first = rng.Index(sig.size());
    std::vector<std::string> out{sig[first]};
    if (sig.size() > 1 && rng.Bernoulli(0.2)) {
      std::size_t second = rng.Index(sig.size() - 1);
      if (second >= first) ++second;
      out.push_back(sig[second]);
    }
    return by_position(std::move(out));
  }

  const std::u32string text = utf8::Decode(item.text);
  const double kind = rng.Uniform();
  if (kind < 0.3 && text.size() > 10) {
    // A window of 11-16 characters that covers one signature phrase.
    const std::u32string phrase = utf8::Decode(sig[rng.Index(sig.size())]);
    const std::size_t pos = text.find(phrase);
    const std::size_t len = std::min<std::size_t>(text.size(), static_cast<std::size_t>(rng.Range(11, 16)));
    const std::size_t end_phrase = pos + phrase.size();
    const std::size_t lo = end_phrase > len ? end_phrase - len : 0;
    const std::size_t hi = std::min(pos, text.size() - len);
    const std::size_t start = lo + (hi >= lo ? rng.Index(hi - lo + 1) : 0);
    return {utf8::Encode(text.substr(start, len))};
  }
  auto is_signature = [&](const std::string& s) { return std::find(sig.begin(), sig.end(), s) != sig.end(); };
  if (kind < 0.6) {
    std::vector<std::string> present;
    for (const auto& w : campaign.disguise_vocabulary) {
      if (item.text.find(w) != std::string::npos && !is_signature(w)) present.push_back(w);
    }
    if (!present.empty()) return {present[rng.Index(present.size())]};
  }
  // The span of a signature phrase with misplaced edges.
  {
    const std::u32string phrase = utf8::Decode(sig[rng.Index(sig.size())]);
    const std::size_t pos = text.find(phrase);
    for (int attempt = 0; attempt < 16; ++attempt) {
      const auto lo = static_cast<std::int64_t>(pos) - rng.Range(0, 2);
      const auto hi = static_cast<std::int64_t>(pos + phrase.size()) + rng.Range(0, 2);
      const auto start = std::max<std::int64_t>(lo, 0);
      const auto end = std::min<std::int64_t>(hi, static_cast<std::int64_t>(text.size()));
      if (end - start < 2) continue;
      std::string piece = utf8::Encode(text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(end - start)));
      if (!is_signature(piece)) return {piece};
    }
  }
  // A short arbitrary piece of the text.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::size_t len = std::min<std::size_t>(text.size(), static_cast<std::size_t>(rng.Range(2, 4)));
    const std::size_t start = rng.Index(text.size() - len + 1);
    std::string piece = utf8::Encode(text.substr(start, len));
    if (!is_signature(piece)) return {piece};
  }
  return {item.text};
}

std::vector<Report> SampleReports(const Corpus& corpus, std::int64_t n, std::uint64_t seed) {
  if (n < 0) throw ContractError("sample_reports: n must be >= 0");
  std::vector<const Item*> toxic;
  for (const auto& item : corpus.items) {
    if (item.is_toxic) toxic.push_back(&item);
  }
  if (static_cast<std::int64_t>(toxic.size()) < n) {
    throw CapacityError("sample_reports: requested " + std::to_string(n) + " reports but corpus has only " +
                        std::to_string(toxic.size()) + " toxic items");
  }
  Rng rng = Rng::Derive(seed, kReportSalt, static_cast<std::uint64_t>(corpus.config.period));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    std::swap(toxic[i], toxic[i + rng.Index(toxic.size() - i)]);
  }
  toxic.resize(static_cast<std::size_t>(n));
  std::sort(toxic.begin(), toxic.end(), [](const Item* a, const Item* b) { return a->id < b->id; });

  std::vector<Report> reports;
  reports.reserve(toxic.size());
  for (const Item* item : toxic) {
    Report r;
    r.item_id = item->id;
    r.tick = item->created_at + 1;
    r.oracle_keywords = OracleAnnotate(*item, corpus.campaign(*item->campaign_id), corpus.config.annotation_noise, seed);
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace toxq::corpus
