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

// Synthetic fixtures: random similarity blocks for property tests and a
// separable two-class text corpus with its own embedding vocabulary.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "smisel/harness.hpp"
#include "smisel/kernel.hpp"
#include "smisel/random.hpp"

namespace synth {

// Cosine similarities of random nonnegative unit vectors, blended toward the
// identity by `ridge`: (G^T G + ridge I) / (1 + ridge). Entries lie in [0, 1]
// and every block comes from one PSD Gram matrix over U and Q together.
inline oracle::Blocks random_blocks(smisel::Rng& rng, std::size_t n, std::size_t q, std::size_t dim,
                                    double ridge = 0.0) {
  const std::size_t total = n + q;
  std::vector<std::vector<double>> g(total, std::vector<double>(dim));
  for (auto& v : g) {
    double norm = 0.0;
    for (double& x : v) {
      x = rng.uniform();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  auto s = [&](std::size_t i, std::size_t j) {
    double d = 0.0;
    for (std::size_t k = 0; k < dim; ++k) d += g[i][k] * g[j][k];
    return (d + (i == j ? ridge : 0.0)) / (1.0 + ridge);
  };
  oracle::Blocks b;
  b.uu.assign(n, std::vector<double>(n));
  b.uq.assign(n, std::vector<double>(q));
  b.qq.assign(q, std::vector<double>(q));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) b.uu[i][j] = s(i, j);
    for (std::size_t j = 0; j < q; ++j) b.uq[i][j] = s(i, n + j);
  }
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) b.qq[i][j] = s(n + i, n + j);
  }
  return b;
}

inline smisel::SimilarityKernel to_kernel(const oracle::Dense& d) {
  smisel::SimilarityKernel k;
  const std::size_t cols = d.empty() ? 0 : d[0].size();
  k.values = smisel::Matrix(d.size(), cols);
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) k.values(r, c) = d[r][c];
  }
  return k;
}

inline smisel::KernelSet to_kernel_set(const oracle::Blocks& b) {
  return {to_kernel(b.uq), to_kernel(b.uu), to_kernel(b.qq)};
}

// Two-class corpus. Each class is a union of `topics` Gaussian clusters in
// embedding space; a document is a bag of words from one cluster plus shared
// filler words. The query phrases are one rare exemplar per rare topic.
//
// With no shared class direction (class_weight 0) an exemplar only speaks
// for its own topic, so a partial query set misses part of the rare class.
// A large class_weight makes one topic enough to learn the whole class.
struct CorpusSpec {
  std::size_t dim = 24;
  std::size_t topics = 5;
  std::size_t words_per_topic = 8;
  std::size_t filler_words = 20;
  std::size_t topic_words_per_doc = 4;
  std::size_t filler_per_doc = 2;
  std::size_t rare_docs = 110;
  std::size_t common_docs = 560;
  double class_weight = 0.0;   // shared class direction
  double topic_weight = 1.0;   // per-topic direction
  double word_noise = 0.3;
  double filler_scale = 0.6;
  std::uint64_t seed = 7;
};

struct SyntheticData {
  smisel::ExperimentInputs inputs;
  std::size_t rare_docs = 0;
  std::size_t common_docs = 0;
};

inline std::vector<double> gaussian(smisel::Rng& rng, std::size_t dim, double scale) {
  std::vector<double> v(dim);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline SyntheticData make_corpus(const CorpusSpec& spec = {}) {
  smisel::Rng rng(spec.seed);
  const auto dir_scale = 1.0 / std::sqrt(static_cast<double>(spec.dim));
  const auto rare_dir = gaussian(rng, spec.dim, dir_scale);
  const auto common_dir = gaussian(rng, spec.dim, dir_scale);

  smisel::EmbeddingTable table(spec.dim);
  auto add_topic_words = [&](const std::string& prefix, const std::vector<double>& class_dir) {
    const auto topic_dir = gaussian(rng, spec.dim, dir_scale);
    for (std::size_t w = 0; w < spec.words_per_topic; ++w) {
      auto v = gaussian(rng, spec.dim, spec.word_noise * dir_scale);
      for (std::size_t k = 0; k < spec.dim; ++k) {
        v[k] += spec.class_weight * class_dir[k] + spec.topic_weight * topic_dir[k];
      }
      table.insert(prefix + "w" + std::to_string(w), v);
    }
  };
  for (std::size_t t = 0; t < spec.topics; ++t) add_topic_words("r" + std::to_string(t), rare_dir);
  for (std::size_t t = 0; t < spec.topics; ++t) add_topic_words("c" + std::to_string(t), common_dir);
  for (std::size_t f = 0; f < spec.filler_words; ++f) {
    table.insert("f" + std::to_string(f), gaussian(rng, spec.dim, spec.filler_scale * dir_scale));
  }

  auto doc_text = [&](char cls, std::size_t topic) {
    std::string text;
    for (std::size_t i = 0; i < spec.topic_words_per_doc; ++i) {
      text += std::string(1, cls) + std::to_string(topic) + "w" +
              std::to_string(rng.below(spec.words_per_topic)) + " ";
    }
    for (std::size_t i = 0; i < spec.filler_per_doc; ++i) {
      text += "f" + std::to_string(rng.below(spec.filler_words)) + " ";
    }
    text.pop_back();
    return text;
  };

  smisel::Corpus corpus;
  corpus.name = "synthetic";
  corpus.class_names = {"common", "rare"};
  corpus.rare_class = 1;
  // Interleave the classes so ids carry no class information.
  std::size_t r = 0;
  std::size_t c = 0;
  while (r < spec.rare_docs || c < spec.common_docs) {
    const bool rare = r < spec.rare_docs &&
                      (c >= spec.common_docs || rng.below(spec.rare_docs + spec.common_docs) <
                                                    spec.rare_docs);
    const std::size_t topic = rng.below(spec.topics);
    corpus.docs.push_back({corpus.docs.size(), doc_text(rare ? 'r' : 'c', topic), rare ? 1 : 0});
    (rare ? r : c) += 1;
  }

  std::vector<std::string> phrases;
  for (std::size_t t = 0; t < spec.topics; ++t) {
    const std::string p = "r" + std::to_string(t);
    phrases.push_back(p + "w0 " + p + "w1 " + p + "w2");
  }
  return {{std::move(corpus), std::move(table), smisel::QueryPhraseSet::from_lines(phrases)},
          spec.rare_docs,
          spec.common_docs};
}

// Config for the synthetic corpus: imbalance 1:10 in a 50/500 pool, balanced
// 60/60 test set, budget 30.
inline smisel::ExperimentConfig corpus_config(smisel::Strategy strategy) {
  smisel::ExperimentConfig c;
  c.dataset_name = "synthetic";
  c.strategy = strategy;
  c.budget = 30;
  c.split = smisel::SplitSpec{50, 500, 60, 60};
  c.train.learning_rate = 0.5;
  c.train.epochs = 60;
  c.train.batch_size = 8;
  return c;
}

// Writes the corpus as the three input files the CLI reads: corpus.csv,
// vectors.txt and queries.txt.
inline void write_files(const SyntheticData& data, const CorpusSpec& spec,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "corpus.csv");
  csv << "text,label\n";
  for (const auto& d : data.inputs.corpus.docs) {
    csv << d.text << ',' << data.inputs.corpus.class_names[static_cast<std::size_t>(*d.label)]
        << '\n';
  }
  std::ofstream vec(dir / "vectors.txt");
  vec.precision(17);
  std::vector<std::string> tokens;
  for (std::size_t t = 0; t < spec.topics; ++t) {
    for (std::size_t w = 0; w < spec.words_per_topic; ++w) {
      tokens.push_back("r" + std::to_string(t) + "w" + std::to_string(w));
      tokens.push_back("c" + std::to_string(t) + "w" + std::to_string(w));
    }
  }
  for (std::size_t f = 0; f < spec.filler_words; ++f) tokens.push_back("f" + std::to_string(f));
  for (const auto& tok : tokens) {
    vec << tok;
    const auto v = data.inputs.embeddings.find(tok);
    for (double x : *v) vec << ' ' << x;
    vec << '\n';
  }
  std::ofstream q(dir / "queries.txt");
  for (const auto& p : data.inputs.queries->phrases) q << p << '\n';
}

}  // namespace synth
