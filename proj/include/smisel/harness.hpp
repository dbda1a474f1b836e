// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Cold-start selection experiments.
//
// A trial splits the corpus into an unlabeled training pool and a balanced
// test set, selects `budget` pool documents with one strategy, reveals their
// gold labels, trains the downstream classifier on them and scores it on the
// test set. Selection code only ever sees an UnlabeledPool; labels come back
// through the Annotator.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smisel/baselines.hpp"
#include "smisel/classifier.hpp"
#include "smisel/csv.hpp"
#include "smisel/error.hpp"
#include "smisel/kernel.hpp"
#include "smisel/optimizer.hpp"
#include "smisel/random.hpp"
#include "smisel/smi.hpp"

namespace smisel {

// ---------------------------------------------------------------------------
// Corpus ingestion

struct Corpus {
  std::string name;
  std::vector<Document> docs;
  std::vector<std::string> class_names;  // index -> label string, first-seen order
  int rare_class = 0;

  std::size_t num_classes() const noexcept { return class_names.size(); }
};

// Reads a CSV with a header containing `text` and `label` columns. Labels are
// mapped to class indices in first-seen order; documents get sequential ids.
inline Corpus ingest_dataset(std::istream& in, const std::string& rare_label,
                             const std::string& source = "<csv>") {
  csv::Reader reader(in, source);
  auto header = reader.next();
  if (!header) throw ConfigError(source + ": empty dataset file");
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) {
    header->front().erase(0, 3);
  }
  std::optional<std::size_t> text_col, label_col;
  for (std::size_t i = 0; i < header->size(); ++i) {
    if ((*header)[i] == "text") text_col = i;
    if ((*header)[i] == "label") label_col = i;
  }
  if (!text_col) throw ConfigError(source + ": missing 'text' column");
  if (!label_col) throw ConfigError(source + ": missing 'label' column");

  Corpus corpus;
  corpus.name = source;
  std::unordered_map<std::string, int> index;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() <= std::max(*text_col, *label_col)) {
      throw FormatError(source + ": short row near line " + std::to_string(reader.line()));
    }
    const std::string& label = (*row)[*label_col];
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(corpus.class_names.size()));
    if (inserted) corpus.class_names.push_back(label);
    corpus.docs.push_back(Document{corpus.docs.size(), (*row)[*text_col], it->second});
  }
  auto rare = index.find(rare_label);
  if (rare == index.end()) {
    throw ConfigError(source + ": rare label '" + rare_label + "' does not occur in the data");
  }
  corpus.rare_class = rare->second;
  return corpus;
}

inline Corpus ingest_dataset(const std::string& path, const std::string& rare_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return ingest_dataset(in, rare_label, path);
}

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  std::size_t rare_train = 0;
  std::size_t common_train = 0;
  std::size_t rare_test = 0;
  std::size_t common_test = 0;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct ImbalanceRatio {
  std::size_t rare = 1;
  std::size_t common = 10;

  friend bool operator==(const ImbalanceRatio&, const ImbalanceRatio&) = default;
};

inline ImbalanceRatio parse_ratio(std::string_view s) {
  const auto colon = s.find(':');
  auto parse = [&](std::string_view part) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || p != part.data() + part.size() || v == 0) {
      throw ConfigError("bad imbalance ratio '" + std::string(s) + "', expected r:c");
    }
    return v;
  };
  if (colon == std::string_view::npos) {
    throw ConfigError("bad imbalance ratio '" + std::string(s) + "', expected r:c");
  }
  return {parse(s.substr(0, colon)), parse(s.substr(colon + 1))};
}

inline SplitSpec parse_split(std::string_view s) {
  std::array<std::size_t, 4> v{};
  std::size_t k = 0;
  bool ok = true;
  for (std::size_t start = 0; ok; ++k) {
    const auto slash = s.find('/', start);
    const auto part = s.substr(start, slash == std::string_view::npos ? s.npos : slash - start);
    if (k == 4 || part.empty()) {
      ok = false;
      break;
    }
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v[k]);
    ok = ec == std::errc() && p == part.data() + part.size();
    if (slash == std::string_view::npos) {
      ++k;
      break;
    }
    start = slash + 1;
  }
  if (!ok || k != 4) {
    throw ConfigError("bad split '" + std::string(s) +
                      "', expected rare_train/common_train/rare_test/common_test");
  }
  return {v[0], v[1], v[2], v[3]};
}

struct DataSplit {
  std::vector<Document> train;  // ascending id
  std::vector<Document> test;   // ascending id
};

namespace detail {

inline void partition_by_rarity(const Corpus& corpus, std::vector<const Document*>& rare,
                                std::vector<const Document*>& common) {
  for (const auto& d : corpus.docs) {
    require(d.label.has_value(), "corpus document " + std::to_string(d.id) + " has no label");
    (*d.label == corpus.rare_class ? rare : common).push_back(&d);
  }
}

inline DataSplit take_split(std::vector<const Document*>& rare,
                            std::vector<const Document*>& common, const SplitSpec& spec,
                            Rng& rng) {
  rng.shuffle(std::span<const Document*>(rare));
  rng.shuffle(std::span<const Document*>(common));
  DataSplit out;
  for (std::size_t i = 0; i < spec.rare_test; ++i) out.test.push_back(*rare[i]);
  for (std::size_t i = 0; i < spec.common_test; ++i) out.test.push_back(*common[i]);
  for (std::size_t i = 0; i < spec.rare_train; ++i) out.train.push_back(*rare[spec.rare_test + i]);
  for (std::size_t i = 0; i < spec.common_train; ++i) {
    out.train.push_back(*common[spec.common_test + i]);
  }
  auto by_id = [](const Document& a, const Document& b) { return a.id < b.id; };
  std::sort(out.train.begin(), out.train.end(), by_id);
  std::sort(out.test.begin(), out.test.end(), by_id);
  return out;
}

}  // namespace detail

// Samples exactly the requested counts. "Common" is every non-rare class.
inline DataSplit make_splits(const Corpus& corpus, const SplitSpec& spec, std::uint64_t seed) {
  std::vector<const Document*> rare, common;
  detail::partition_by_rarity(corpus, rare, common);
  const std::string& rare_name = corpus.class_names.at(static_cast<std::size_t>(corpus.rare_class));
  auto check = [](const std::string& cls, std::size_t need, std::size_t have) {
    if (need > have) {
      throw ConfigError("insufficient instances of class '" + cls + "': need " +
                        std::to_string(need) + ", have " + std::to_string(have) + " (short by " +
                        std::to_string(need - have) + ")");
    }
  };
  check(rare_name, spec.rare_train + spec.rare_test, rare.size());
  check("<common>", spec.common_train + spec.common_test, common.size());
  Rng rng(seed);
  return detail::take_split(rare, common, spec, rng);
}

struct ClassCounts {
  std::size_t rare = 0;
  std::size_t common = 0;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// Largest sub-corpus whose rare:common ratio does not exceed `ratio`; a
// corpus already at or below the ratio is kept whole.
inline ClassCounts induce_imbalance(std::size_t rare_total, std::size_t common_total,
                                   const ImbalanceRatio& ratio) {
  ClassCounts kept{rare_total, common_total};
  // r / c > ratio.rare / ratio.common  <=>  r * ratio.common > c * ratio.rare
  if (rare_total * ratio.common > common_total * ratio.rare) {
    kept.rare = common_total * ratio.rare / ratio.common;
  }
  return kept;
}

// Induces the imbalance on the whole corpus, then carves a balanced test set
// of `test_per_class` per side from it; the rest is the training pool.
inline SplitSpec split_for_ratio(std::size_t rare_total, std::size_t common_total,
                                 const ImbalanceRatio& ratio, std::size_t test_per_class) {
  const ClassCounts kept = induce_imbalance(rare_total, common_total, ratio);
  if (test_per_class >= kept.rare || test_per_class >= kept.common) {
    throw ConfigError("test set of " + std::to_string(test_per_class) +
                      " per class leaves no training instances (rare " + std::to_string(kept.rare) +
                      ", common " + std::to_string(kept.common) + " after imbalance)");
  }
  return {kept.rare - test_per_class, kept.common - test_per_class, test_per_class,
          test_per_class};
}

inline DataSplit make_splits(const Corpus& corpus, const ImbalanceRatio& ratio,
                             std::size_t test_per_class, std::uint64_t seed) {
  std::vector<const Document*> rare, common;
  detail::partition_by_rarity(corpus, rare, common);
  return make_splits(corpus, split_for_ratio(rare.size(), common.size(), ratio, test_per_class),
                     seed);
}

// ---------------------------------------------------------------------------
// Label-blind views

struct UnlabeledPool {
  std::vector<std::size_t> ids;  // ascending
  std::vector<std::string> texts;

  static UnlabeledPool from(std::span<const Document> docs) {
    UnlabeledPool p;
    for (const auto& d : docs) {
      p.ids.push_back(d.id);
      p.texts.push_back(d.text);
    }
    return p;
  }

  std::size_t size() const noexcept { return ids.size(); }
};

// Simulated annotator: reveals gold labels for requested ids, without noise.
class Annotator {
 public:
  explicit Annotator(std::span<const Document> docs) {
    for (const auto& d : docs) {
      require(d.label.has_value(), "annotator needs gold labels");
      labels_.emplace(d.id, *d.label);
    }
  }

  std::vector<int> annotate(std::span<const std::size_t> ids) const {
    std::vector<int> out;
    out.reserve(ids.size());
    for (std::size_t id : ids) {
      auto it = labels_.find(id);
      require(it != labels_.end(), "annotator asked for unknown id " + std::to_string(id));
      out.push_back(it->second);
    }
    return out;
  }

 private:
  std::unordered_map<std::size_t, int> labels_;
};

// ---------------------------------------------------------------------------
// Configuration

enum class Strategy {
  flvmi, flqmi, gcmi, logdetmi, random, entropy, leastconf, margin, badge, regex, kmeans
};

inline constexpr std::array<Strategy, 11> kAllStrategies = {
    Strategy::flvmi,  Strategy::flqmi,   Strategy::gcmi,      Strategy::logdetmi,
    Strategy::random, Strategy::entropy, Strategy::leastconf, Strategy::margin,
    Strategy::badge,  Strategy::regex,   Strategy::kmeans};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::flvmi: return "flvmi";
    case Strategy::flqmi: return "flqmi";
    case Strategy::gcmi: return "gcmi";
    case Strategy::logdetmi: return "logdetmi";
    case Strategy::random: return "random";
    case Strategy::entropy: return "entropy";
    case Strategy::leastconf: return "leastconf";
    case Strategy::margin: return "margin";
    case Strategy::badge: return "badge";
    case Strategy::regex: return "regex";
    case Strategy::kmeans: return "kmeans";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (Strategy x : kAllStrategies) {
    if (to_string(x) == s) return x;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

inline std::optional<Variant> smi_variant(Strategy s) {
  switch (s) {
    case Strategy::flvmi: return Variant::flvmi;
    case Strategy::flqmi: return Variant::flqmi;
    case Strategy::gcmi: return Variant::gcmi;
    case Strategy::logdetmi: return Variant::logdetmi;
    default: return std::nullopt;
  }
}

inline bool needs_model(Strategy s) {
  return s == Strategy::entropy || s == Strategy::leastconf || s == Strategy::margin ||
         s == Strategy::badge;
}

inline bool needs_queries(Strategy s) { return smi_variant(s).has_value() || s == Strategy::regex; }

enum class OptimizerChoice { automatic, naive, lazy, stochastic };

inline std::string_view to_string(OptimizerChoice o) {
  switch (o) {
    case OptimizerChoice::automatic: return "auto";
    case OptimizerChoice::naive: return "naive";
    case OptimizerChoice::lazy: return "lazy";
    case OptimizerChoice::stochastic: return "stochastic";
  }
  return "?";
}

inline OptimizerChoice parse_optimizer(std::string_view s) {
  if (s == "auto") return OptimizerChoice::automatic;
  if (s == "naive") return OptimizerChoice::naive;
  if (s == "lazy") return OptimizerChoice::lazy;
  if (s == "stochastic") return OptimizerChoice::stochastic;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

// Lazy evaluation is exact only under diminishing returns, which LOGDETMI
// does not have on general kernels; `auto` runs it with the naive scan.
inline GreedyKind resolve_optimizer(OptimizerChoice o, Variant v) {
  switch (o) {
    case OptimizerChoice::naive: return GreedyKind::naive;
    case OptimizerChoice::lazy: return GreedyKind::lazy;
    case OptimizerChoice::stochastic: return GreedyKind::stochastic;
    case OptimizerChoice::automatic: break;
  }
  return v == Variant::logdetmi ? GreedyKind::naive : GreedyKind::lazy;
}

// Settings for the three benchmark datasets.
struct DatasetDefaults {
  std::string_view tag;
  std::string_view rare_label;
  SplitSpec split;
  std::size_t budget;
  std::size_t epochs;
  std::string_view query_file;
};

inline constexpr std::array<DatasetDefaults, 3> kDatasetDefaults = {{
    {"youtube", "1", {85, 808, 151, 143}, 50, 50, "youtube.txt"},
    {"sms", "spam", {234, 4312, 480, 476}, 136, 30, "sms.txt"},
    {"tweet", "positive", {1402, 8178, 936, 909}, 144, 25, "tweet.txt"},
}};

inline const DatasetDefaults* find_dataset_defaults(std::string_view tag) {
  for (const auto& d : kDatasetDefaults) {
    if (d.tag == tag) return &d;
  }
  return nullptr;
}

struct ExperimentConfig {
  std::string dataset_path;
  std::string dataset_name;
  std::string rare_label;
  std::string embeddings_path;
  std::string queries_path;
  Strategy strategy = Strategy::logdetmi;
  std::size_t budget = 0;
  double query_fraction = 1.0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  // explicit per-trial seeds; else seed, seed+1, ...
  TrainConfig train;
  std::optional<SplitSpec> split;
  std::optional<ImbalanceRatio> imbalance;
  std::size_t test_per_class = 0;  // ratio splits; 0 picks half the rare side
  OptimizerChoice optimizer = OptimizerChoice::automatic;
  std::size_t stochastic_sample = 0;  // 0 -> default_sample_size
  double lambda = 1.0;
  std::optional<double> epsilon;
  SimilarityOptions similarity;
  std::size_t bootstrap_size = 10;
  std::size_t kmeans_max_iters = 100;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  void validate() const {
    if (budget < 1) throw ConfigError("budget must be at least 1");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (!(query_fraction > 0.0 && query_fraction <= 1.0)) {
      throw ConfigError("query fraction must lie in (0, 1]");
    }
    if (!seeds.empty() && seeds.size() != trials) {
      throw ConfigError("seed list length " + std::to_string(seeds.size()) +
                        " does not match trials " + std::to_string(trials));
    }
    if (bootstrap_size < 1) throw ConfigError("bootstrap size must be at least 1");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (epsilon && !(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    train.validate();
  }

  std::vector<std::uint64_t> trial_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out(trials);
    for (std::size_t t = 0; t < trials; ++t) out[t] = seed + t;
    return out;
  }
};

// Everything a run needs that comes from files.
struct ExperimentInputs {
  Corpus corpus;
  EmbeddingTable embeddings;
  std::optional<QueryPhraseSet> queries;
};

inline ExperimentInputs load_inputs(const ExperimentConfig& config) {
  if (config.dataset_path.empty()) throw ConfigError("no dataset given");
  if (config.rare_label.empty()) throw ConfigError("no rare label given");
  if (config.embeddings_path.empty()) throw ConfigError("no embedding file given");
  Corpus corpus = ingest_dataset(config.dataset_path, config.rare_label);
  if (!config.dataset_name.empty()) corpus.name = config.dataset_name;
  EmbeddingTable table = load_embeddings(config.embeddings_path);
  std::optional<QueryPhraseSet> queries;
  if (!config.queries_path.empty()) {
    queries = QueryPhraseSet::load(config.queries_path);
  } else if (needs_queries(config.strategy)) {
    throw ConfigError("strategy " + std::string(to_string(config.strategy)) +
                      " needs a query file");
  }
  return {std::move(corpus), std::move(table), std::move(queries)};
}

// ---------------------------------------------------------------------------
// Trials

// ceil(fraction * |Q|) phrases, at least one; all phrases in file order when
// fraction is 1, otherwise a seeded random subset kept in file order.
inline std::vector<std::string> subsample_queries(const QueryPhraseSet& queries, double fraction,
                                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("query fraction must lie in (0, 1]");
  const std::size_t total = queries.phrases.size();
  if (fraction == 1.0) return queries.phrases;
  // Guard against 0.6 * 5 = 3.0000000000000004 rounding up to 4.
  const double raw = fraction * static_cast<double>(total);
  std::size_t k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  k = std::clamp<std::size_t>(k, 1, total);
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(queries.phrases[i]);
  return out;
}

struct SelectionOutcome {
  std::vector<std::size_t> ids;  // document ids in selection order
  std::optional<SelectionResult> greedy;
  std::vector<std::string> queries_used;
  std::vector<std::size_t> bootstrap_ids;
};

struct TrialTimings {
  std::chrono::nanoseconds selection{0};
  std::chrono::nanoseconds total{0};
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::vector<std::size_t> selected_ids;
  std::vector<std::size_t> selection_composition;  // per class index
  std::vector<std::string> queries_used;
  MetricsReport metrics;
  TrialTimings timings;  // not serialized

  // Timings are wall-clock noise and do not take part in equality.
  friend bool operator==(const TrialResult& a, const TrialResult& b) {
    return a.seed == b.seed && a.selected_ids == b.selected_ids &&
           a.selection_composition == b.selection_composition &&
           a.queries_used == b.queries_used && a.metrics == b.metrics;
  }
};

namespace detail {

inline Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(m.row(rows[r]).begin(), m.row(rows[r]).end(), out.row(r).begin());
  }
  return out;
}

inline std::vector<std::size_t> rows_of(const FeatureMatrix& f, std::span<const std::size_t> ids) {
  std::unordered_map<std::size_t, std::size_t> pos;
  for (std::size_t r = 0; r < f.ids.size(); ++r) pos.emplace(f.ids[r], r);
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(pos.at(id));
  return out;
}

}  // namespace detail

// Runs one SMI selection over the pool features.
inline SelectionResult smi_select(Variant variant, const FeatureMatrix& pool_features,
                                  const FeatureMatrix& query_features,
                                  const ExperimentConfig& config, std::uint64_t seed) {
  KernelSet kernels = build_kernels(pool_features, query_features, config.similarity,
                                    required_blocks(variant));
  SmiObjective objective(variant, std::move(kernels), SmiParams{config.lambda, config.epsilon});
  SelectionState state(objective);
  std::vector<std::size_t> ground(pool_features.rows());
  for (std::size_t i = 0; i < ground.size(); ++i) ground[i] = i;
  switch (resolve_optimizer(config.optimizer, variant)) {
    case GreedyKind::naive:
      return naive_greedy(state, ground, config.budget);
    case GreedyKind::lazy:
      return lazy_greedy(state, ground, config.budget);
    case GreedyKind::stochastic: {
      const std::size_t m = config.stochastic_sample
                                ? config.stochastic_sample
                                : default_sample_size(ground.size(), config.budget);
      return stochastic_greedy(state, ground, config.budget, m, derive_seed(seed, "stochastic"));
    }
  }
  return {};
}

// Dispatches one strategy. Only the bootstrap micro-batch of model-based
// strategies touches the annotator.
inline SelectionOutcome select_batch(const ExperimentConfig& config, const UnlabeledPool& pool,
                                     const FeatureMatrix& features, const EmbeddingTable& table,
                                     const std::optional<QueryPhraseSet>& queries,
                                     std::size_t num_classes, const Annotator& annotator,
                                     std::uint64_t seed) {
  SelectionOutcome out;
  const Strategy s = config.strategy;
  if (needs_queries(s)) {
    if (!queries) throw ConfigError("strategy " + std::string(to_string(s)) + " needs queries");
    out.queries_used = subsample_queries(*queries, config.query_fraction,
                                         derive_seed(seed, "queries"));
  }

  if (auto variant = smi_variant(s)) {
    std::vector<std::size_t> qids(out.queries_used.size());
    for (std::size_t i = 0; i < qids.size(); ++i) qids[i] = i;
    const FeatureMatrix qf = featurize(out.queries_used, qids, table);
    SelectionResult r = smi_select(*variant, features, qf, config, seed);
    for (std::size_t row : r.selected) out.ids.push_back(features.ids[row]);
    out.greedy = std::move(r);
    return out;
  }

  switch (s) {
    case Strategy::random:
      out.ids = random_select(pool.ids, config.budget, derive_seed(seed, "random"));
      return out;
    case Strategy::regex: {
      QueryPhraseSet used;
      used.phrases = out.queries_used;
      out.ids = regex_select(used, pool.texts, pool.ids, config.budget);
      return out;
    }
    case Strategy::kmeans:
      out.ids = kmeans_select(features, config.budget, derive_seed(seed, "kmeans"),
                              config.kmeans_max_iters);
      return out;
    default:
      break;
  }

  // Model-based strategies: fit the scoring model on a seeded random
  // micro-batch. The seed does not depend on the strategy, so every
  // strategy in a trial bootstraps from the same documents.
  const std::size_t boot = std::min(config.bootstrap_size, pool.size());
  out.bootstrap_ids = random_select(pool.ids, boot, derive_seed(seed, "bootstrap"));
  const Matrix boot_x = detail::gather_rows(features.data, detail::rows_of(features, out.bootstrap_ids));
  const std::vector<int> boot_y = annotator.annotate(out.bootstrap_ids);
  TrainConfig tc = config.train;
  tc.seed = derive_seed(seed, "bootstrap-train");
  const SoftmaxClassifier model = train(boot_x, boot_y, num_classes, tc);

  if (s == Strategy::badge) {
    out.ids = badge_select(model, features, config.budget, derive_seed(seed, "badge"));
    return out;
  }
  const Matrix probs = model.predict_proba(features.data);
  if (s == Strategy::entropy) out.ids = entropy_select(probs, features.ids, config.budget);
  if (s == Strategy::leastconf) out.ids = least_confidence_select(probs, features.ids, config.budget);
  if (s == Strategy::margin) out.ids = margin_select(probs, features.ids, config.budget);
  return out;
}

inline DataSplit split_for_trial(const ExperimentConfig& config, const Corpus& corpus,
                                 std::uint64_t seed) {
  const std::uint64_t split_seed = derive_seed(seed, "split");
  if (config.split) return make_splits(corpus, *config.split, split_seed);
  if (config.imbalance) {
    std::size_t tpc = config.test_per_class;
    if (tpc == 0) {
      // Half of the rare side after imbalance, as in the benchmark splits.
      std::size_t rare = 0;
      for (const auto& d : corpus.docs) rare += (d.label == corpus.rare_class);
      tpc = induce_imbalance(rare, corpus.docs.size() - rare, *config.imbalance).rare / 2;
    }
    return make_splits(corpus, *config.imbalance, tpc, split_seed);
  }
  throw ConfigError("no split given: set a split spec or an imbalance ratio");
}

inline std::vector<std::size_t> composition(std::span<const int> labels, std::size_t num_classes) {
  std::vector<std::size_t> out(num_classes, 0);
  for (int y : labels) ++out.at(static_cast<std::size_t>(y));
  return out;
}

struct SelectionReport {
  std::uint64_t seed = 0;
  std::vector<std::size_t> selected_ids;
  std::vector<std::size_t> selection_composition;
  std::vector<std::string> queries_used;
  std::optional<SelectionResult> greedy;
};

// The selection half of a trial: split, select, reveal labels for the
// composition count. No classifier is trained.
inline SelectionReport run_selection(const ExperimentConfig& config, const ExperimentInputs& inputs,
                                     std::uint64_t seed) {
  config.validate();
  const Corpus& corpus = inputs.corpus;
  const DataSplit split = split_for_trial(config, corpus, seed);
  const UnlabeledPool pool = UnlabeledPool::from(split.train);
  const Annotator annotator(split.train);
  const FeatureMatrix features = featurize(pool.texts, pool.ids, inputs.embeddings);
  SelectionOutcome sel = select_batch(config, pool, features, inputs.embeddings, inputs.queries,
                                      corpus.num_classes(), annotator, seed);
  SelectionReport r;
  r.seed = seed;
  r.selection_composition = composition(annotator.annotate(sel.ids), corpus.num_classes());
  r.selected_ids = std::move(sel.ids);
  r.queries_used = std::move(sel.queries_used);
  r.greedy = std::move(sel.greedy);
  return r;
}

inline TrialResult run_trial(const ExperimentConfig& config, const ExperimentInputs& inputs,
                             std::uint64_t seed) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus& corpus = inputs.corpus;
  const DataSplit split = split_for_trial(config, corpus, seed);
  const UnlabeledPool pool = UnlabeledPool::from(split.train);
  const Annotator annotator(split.train);
  const FeatureMatrix features = featurize(pool.texts, pool.ids, inputs.embeddings);

  const auto t1 = std::chrono::steady_clock::now();
  SelectionOutcome sel = select_batch(config, pool, features, inputs.embeddings, inputs.queries,
                                      corpus.num_classes(), annotator, seed);
  const auto t2 = std::chrono::steady_clock::now();

  TrialResult result;
  result.seed = seed;
  result.selected_ids = sel.ids;
  result.queries_used = std::move(sel.queries_used);
  const std::vector<int> labels = annotator.annotate(sel.ids);
  result.selection_composition = composition(labels, corpus.num_classes());

  const Matrix train_x = detail::gather_rows(features.data, detail::rows_of(features, sel.ids));
  TrainConfig tc = config.train;
  tc.seed = derive_seed(seed, "train");
  const SoftmaxClassifier model = train(train_x, labels, corpus.num_classes(), tc);

  const FeatureMatrix test_features = featurize(split.test, inputs.embeddings);
  std::vector<int> test_labels;
  for (const auto& d : split.test) test_labels.push_back(*d.label);
  result.metrics = evaluate(model, test_features.data, test_labels, corpus.rare_class);

  result.timings.selection = t2 - t1;
  result.timings.total = std::chrono::steady_clock::now() - t0;
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value

  friend bool operator==(const Summary&, const Summary&) = default;
};

inline Summary summarize(std::span<const double> values) {
  require(!values.empty(), "cannot summarize an empty list");
  Summary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

struct AggregateReport {
  ExperimentConfig config;
  std::string dataset;
  std::string strategy;
  double query_fraction = 1.0;
  std::size_t budget = 0;
  std::vector<std::string> class_names;
  int rare_class = 0;
  std::vector<TrialResult> trials;
  Summary accuracy;
  Summary rare_f1;
  Summary rare_selection_rate;

  friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

inline AggregateReport aggregate(const ExperimentConfig& config, const Corpus& corpus,
                                 std::vector<TrialResult> trials) {
  require(!trials.empty(), "no trials to aggregate");
  AggregateReport r;
  r.config = config;
  r.dataset = corpus.name;
  r.strategy = std::string(to_string(config.strategy));
  r.query_fraction = config.query_fraction;
  r.budget = config.budget;
  r.class_names = corpus.class_names;
  r.rare_class = corpus.rare_class;
  std::vector<double> acc, f1, rate;
  for (const auto& t : trials) {
    acc.push_back(t.metrics.accuracy);
    f1.push_back(t.metrics.rare_class_f1);
    rate.push_back(static_cast<double>(t.selection_composition.at(static_cast<std::size_t>(corpus.rare_class))) /
                   static_cast<double>(t.selected_ids.size()));
  }
  r.accuracy = summarize(acc);
  r.rare_f1 = summarize(f1);
  r.rare_selection_rate = summarize(rate);
  r.trials = std::move(trials);
  return r;
}

inline AggregateReport run_experiment(const ExperimentConfig& config, const ExperimentInputs& inputs) {
  config.validate();
  std::vector<TrialResult> trials;
  for (std::uint64_t seed : config.trial_seeds()) {
    try {
      trials.push_back(run_trial(config, inputs, seed));
    } catch (const Error& e) {
      throw Error(e.category(), "trial seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  return aggregate(config, inputs.corpus, std::move(trials));
}

inline std::vector<AggregateReport> run_ablation(const ExperimentConfig& config,
                                                 const ExperimentInputs& inputs,
                                                 std::span<const double> fractions) {
  if (fractions.empty()) throw ConfigError("no query fractions given");
  for (double p : fractions) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw ConfigError("query fraction " + std::to_string(p) + " outside (0, 1]");
    }
  }
  std::vector<AggregateReport> out;
  for (double p : fractions) {
    ExperimentConfig c = config;
    c.query_fraction = p;
    out.push_back(run_experiment(c, inputs));
  }
  return out;
}

}  // namespace smisel
