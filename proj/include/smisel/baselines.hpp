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

// Comparison selection strategies: random, uncertainty sampling (entropy,
// least confidence, margin), BADGE, phrase matching, and k-means 1-NN.
//
// Every selector returns exactly `budget` distinct ids drawn from the ids it
// was given, and none of them sees labels.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smisel/error.hpp"
#include "smisel/kernel.hpp"
#include "smisel/matrix.hpp"
#include "smisel/random.hpp"

namespace smisel {

template <class M>
concept ProbabilisticModel = requires(const M& m, const Matrix& x) {
  { m.predict_proba(x) } -> std::same_as<Matrix>;
  { m.num_classes() } -> std::convertible_to<std::size_t>;
  { m.feature_dim() } -> std::convertible_to<std::size_t>;
};

namespace detail {

inline void check_selection_budget(std::size_t budget, std::size_t n) {
  if (budget == 0) throw ConfigError("budget must be at least 1");
  if (budget > n) {
    throw ConfigError("budget " + std::to_string(budget) + " exceeds pool size " +
                      std::to_string(n));
  }
}

// Ids of the `budget` highest (descending) or lowest scores. Ties go to the
// lower id.
inline std::vector<std::size_t> top_by_score(std::span<const double> scores,
                                             std::span<const std::size_t> ids, std::size_t budget,
                                             bool descending) {
  check_selection_budget(budget, ids.size());
  std::vector<std::size_t> pos(ids.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    return ids[a] < ids[b];
  });
  std::vector<std::size_t> out;
  out.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) out.push_back(ids[pos[i]]);
  return out;
}

inline void check_probability_rows(const Matrix& probs, std::size_t n) {
  require(probs.rows() == n, "probability rows do not match the id list");
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double s = 0.0;
    for (double p : probs.row(r)) {
      require(p >= 0.0, "negative probability in row " + std::to_string(r));
      s += p;
    }
    require(std::abs(s - 1.0) <= 1e-6, "probability row " + std::to_string(r) + " sums to " +
                                           std::to_string(s));
  }
}

}  // namespace detail

inline std::vector<std::size_t> random_select(std::span<const std::size_t> ids, std::size_t budget,
                                              std::uint64_t seed) {
  detail::check_selection_budget(budget, ids.size());
  Rng rng(seed);
  std::vector<std::size_t> pool(ids.begin(), ids.end());
  for (std::size_t i = 0; i < budget; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(budget);
  return pool;
}

// H(p) = -sum p_i log p_i with 0 log 0 = 0.
inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

inline double max_probability(std::span<const double> p) {
  return *std::max_element(p.begin(), p.end());
}

// Top-1 minus top-2 probability; 1 - p for a single class.
inline double probability_margin(std::span<const double> p) {
  double first = -1.0, second = 0.0;
  for (double v : p) {
    if (v > first) {
      second = std::max(second, first);
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return first - second;
}

inline std::vector<std::size_t> entropy_select(const Matrix& probs, std::span<const std::size_t> ids,
                                               std::size_t budget) {
  detail::check_probability_rows(probs, ids.size());
  std::vector<double> s(probs.rows());
  for (std::size_t r = 0; r < s.size(); ++r) s[r] = entropy(probs.row(r));
  return detail::top_by_score(s, ids, budget, /*descending=*/true);
}

inline std::vector<std::size_t> least_confidence_select(const Matrix& probs,
                                                        std::span<const std::size_t> ids,
                                                        std::size_t budget) {
  detail::check_probability_rows(probs, ids.size());
  std::vector<double> s(probs.rows());
  for (std::size_t r = 0; r < s.size(); ++r) s[r] = max_probability(probs.row(r));
  return detail::top_by_score(s, ids, budget, /*descending=*/false);
}

inline std::vector<std::size_t> margin_select(const Matrix& probs, std::span<const std::size_t> ids,
                                              std::size_t budget) {
  detail::check_probability_rows(probs, ids.size());
  std::vector<double> s(probs.rows());
  for (std::size_t r = 0; r < s.size(); ++r) s[r] = probability_margin(probs.row(r));
  return detail::top_by_score(s, ids, budget, /*descending=*/false);
}

// Hypothesized last-layer cross-entropy gradient under the pseudo-label
// argmax p: (p - e_yhat) (x) x, flattened class-major.
inline Matrix gradient_embedding(const Matrix& probs, const Matrix& features) {
  require(probs.rows() == features.rows(), "probabilities and features differ in rows");
  const std::size_t k = probs.cols();
  const std::size_t d = features.cols();
  Matrix g(features.rows(), k * d);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto p = probs.row(r);
    const auto yhat = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const auto x = features.row(r);
    auto out = g.row(r);
    for (std::size_t c = 0; c < k; ++c) {
      const double delta = p[c] - (c == yhat ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) out[c * d + j] = delta * x[j];
    }
  }
  return g;
}

// k-means++ seeding: the first center is uniform, each next one is drawn with
// probability proportional to squared distance to the nearest chosen center.
// If every remaining point coincides with a chosen center, the next one is
// drawn uniformly among unchosen points.
inline std::vector<std::size_t> kmeanspp(const Matrix& points, std::size_t budget, Rng& rng) {
  const std::size_t n = points.rows();
  detail::check_selection_budget(budget, n);
  std::vector<std::size_t> centers;
  centers.reserve(budget);
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t c) {
    centers.push_back(c);
    chosen[c] = true;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = chosen[i] ? 0.0 : std::min(d2[i], squared_distance(points.row(i), points.row(c)));
    }
  };

  take(static_cast<std::size_t>(rng.below(n)));
  while (centers.size() < budget) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (u < acc) break;
      }
    } else {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      pick = free[static_cast<std::size_t>(rng.below(free.size()))];
    }
    take(pick);
  }
  return centers;
}

inline std::vector<std::size_t> kmeanspp(const Matrix& points, std::size_t budget,
                                         std::uint64_t seed) {
  Rng rng(seed);
  return kmeanspp(points, budget, rng);
}

template <ProbabilisticModel Model>
std::vector<std::size_t> badge_select(const Model& model, const FeatureMatrix& features,
                                      std::size_t budget, std::uint64_t seed) {
  detail::check_selection_budget(budget, features.rows());
  const Matrix probs = model.predict_proba(features.data);
  const Matrix g = gradient_embedding(probs, features.data);
  std::vector<std::size_t> out;
  for (std::size_t r : kmeanspp(g, budget, seed)) out.push_back(features.ids[r]);
  return out;
}

struct QueryPhraseSet {
  enum class Tag { youtube, sms, tweet, custom };

  std::vector<std::string> phrases;
  Tag tag = Tag::custom;

  static QueryPhraseSet from_lines(std::span<const std::string> lines, Tag tag = Tag::custom) {
    QueryPhraseSet q;
    q.tag = tag;
    for (std::string line : lines) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      std::size_t b = 0;
      while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
      line.erase(0, b);
      if (line.empty()) continue;
      for (char& c : line) {
        if (static_cast<unsigned char>(c) < 0x80) {
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
      }
      q.phrases.push_back(std::move(line));
    }
    if (q.phrases.empty()) throw ConfigError("query phrase set is empty");
    return q;
  }

  static QueryPhraseSet load(const std::string& path, Tag tag = Tag::custom) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open query file '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return from_lines(lines, tag);
  }
};

namespace detail {

inline std::string regex_escape(std::string_view s) {
  static const std::string_view special = R"(\^$.|?*+()[]{}/-)";
  std::string out;
  for (char c : s) {
    if (special.find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

// Whole phrase, case-insensitive, bounded by non-word characters or the ends
// of the text; internal whitespace runs match any whitespace run.
inline std::regex phrase_regex(std::string_view phrase) {
  std::string body;
  bool space = false;
  for (char c : phrase) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !body.empty()) body += "\\s+";
    space = false;
    body += regex_escape(std::string_view(&c, 1));
  }
  return std::regex("(?:^|[^A-Za-z0-9_])(" + body + ")(?=[^A-Za-z0-9_]|$)",
                    std::regex::ECMAScript | std::regex::icase);
}

}  // namespace detail

// Non-overlapping whole-phrase occurrences of `phrase` in `text`.
inline std::size_t count_phrase_matches(const std::regex& re, const std::string& text) {
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

inline std::size_t count_phrase_matches(std::string_view phrase, const std::string& text) {
  return count_phrase_matches(detail::phrase_regex(phrase), text);
}

inline std::vector<std::size_t> regex_scores(const QueryPhraseSet& queries,
                                             std::span<const std::string> texts) {
  if (queries.phrases.empty()) throw ConfigError("query phrase set is empty");
  std::vector<std::regex> patterns;
  for (const auto& p : queries.phrases) patterns.push_back(detail::phrase_regex(p));
  std::vector<std::size_t> scores(texts.size(), 0);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (const auto& re : patterns) scores[i] += count_phrase_matches(re, texts[i]);
  }
  return scores;
}

inline std::vector<std::size_t> regex_select(const QueryPhraseSet& queries,
                                             std::span<const std::string> texts,
                                             std::span<const std::size_t> ids, std::size_t budget) {
  require(texts.size() == ids.size(), "texts and ids differ in length");
  if (queries.phrases.empty()) throw ConfigError("query phrase set is empty");
  detail::check_selection_budget(budget, ids.size());
  const auto counts = regex_scores(queries, texts);
  std::vector<double> s(counts.begin(), counts.end());
  return detail::top_by_score(s, ids, budget, /*descending=*/true);
}

struct KMeansResult {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  std::size_t iterations = 0;
};

// Lloyd's iterations from k-means++ seeding until the assignment stops
// changing or max_iters is reached. An empty cluster is re-seeded at the
// point farthest from its assigned centroid.
inline KMeansResult lloyd_kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                                 std::size_t max_iters = 100) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  detail::check_selection_budget(k, n);
  KMeansResult res;
  res.centroids = Matrix(k, d);
  const auto init = kmeanspp(points, k, seed);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(points.row(init[c]).begin(), d, res.centroids.row(c).begin());
  }
  res.assignment.assign(n, k);

  auto nearest = [&](std::size_t i) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double dd = squared_distance(points.row(i), res.centroids.row(c));
      if (dd < bd) {
        bd = dd;
        best = c;
      }
    }
    return best;
  };

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest(i);
      if (c != res.assignment[i]) {
        res.assignment[i] = c;
        changed = true;
      }
    }
    res.iterations = iter + 1;
    if (!changed) break;

    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = res.assignment[i];
      ++counts[c];
      auto s = sums.row(c);
      const auto x = points.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
    }
    std::vector<std::size_t> empty;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        empty.push_back(c);
        continue;
      }
      auto centroid = res.centroids.row(c);
      const auto s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) centroid[j] = s[j] / static_cast<double>(counts[c]);
    }
    std::vector<bool> reseeded(n, false);
    for (std::size_t c : empty) {
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (reseeded[i]) continue;
        const double dd = squared_distance(points.row(i), res.centroids.row(res.assignment[i]));
        if (dd > fd) {
          fd = dd;
          far = i;
        }
      }
      reseeded[far] = true;
      std::copy_n(points.row(far).begin(), d, res.centroids.row(c).begin());
    }
  }
  return res;
}

// k-means with k = budget; returns the nearest unused instance to each final
// centroid, in centroid order.
inline std::vector<std::size_t> kmeans_select(const FeatureMatrix& features, std::size_t budget,
                                              std::uint64_t seed, std::size_t max_iters = 100) {
  const std::size_t n = features.rows();
  detail::check_selection_budget(budget, n);
  const auto km = lloyd_kmeans(features.data, budget, seed, max_iters);
  std::vector<bool> used(n, false);
  std::vector<std::size_t> out;
  out.reserve(budget);
  for (std::size_t c = 0; c < budget; ++c) {
    std::size_t best = n;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double dd = squared_distance(features.data.row(i), km.centroids.row(c));
      if (best == n || dd < bd || (dd == bd && features.ids[i] < features.ids[best])) {
        bd = dd;
        best = i;
      }
    }
    used[best] = true;
    out.push_back(features.ids[best]);
  }
  return out;
}

}  // namespace smisel
