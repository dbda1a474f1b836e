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

// Text featurization and similarity kernels.
//
// Documents are featurized as the unweighted mean of the pretrained vectors
// of their in-vocabulary tokens. Kernels hold pairwise similarities in [0,1]
// between two feature sets, dense and row-major.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smisel/error.hpp"
#include "smisel/matrix.hpp"

namespace smisel {

struct Document {
  std::size_t id = 0;
  std::string text;
  std::optional<int> label;
};

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw ConfigError("embedding dimension must be positive");
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return index_.size(); }
  bool empty() const noexcept { return index_.empty(); }

  // First occurrence wins; returns false when the token was already present.
  bool insert(std::string token, std::span<const double> vec) {
    require(vec.size() == dimension_, "embedding vector length != table dimension");
    auto [it, inserted] = index_.try_emplace(std::move(token), index_.size());
    if (!inserted) return false;
    values_.insert(values_.end(), vec.begin(), vec.end());
    return true;
  }

  std::optional<std::span<const double>> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return std::span<const double>(values_.data() + it->second * dimension_, dimension_);
  }

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> values_;
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

// Reads the `token c1 c2 ... cd` text format used by pretrained vector
// distributions.
inline EmbeddingTable load_embeddings(std::istream& in,
                                      std::optional<std::size_t> expected_dim = std::nullopt,
                                      std::string_view source = "<stream>") {
  std::optional<EmbeddingTable> table;
  std::string line;
  std::vector<double> vec;
  std::size_t lineno = 0;
  std::size_t duplicates = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    vec.clear();
    std::string field;
    while (fields >> field) {
      double v;
      if (!detail::parse_double(field, v)) {
        throw FormatError(std::string(source) + ":" + std::to_string(lineno) +
                          ": bad float component '" + field + "'");
      }
      vec.push_back(v);
    }
    if (vec.empty()) {
      throw FormatError(std::string(source) + ":" + std::to_string(lineno) +
                        ": token '" + token + "' has no components");
    }
    if (!table) {
      if (expected_dim && *expected_dim != vec.size()) {
        throw ConfigError("embedding dimension " + std::to_string(vec.size()) +
                          " does not match expected " + std::to_string(*expected_dim));
      }
      table.emplace(vec.size());
    }
    if (vec.size() != table->dimension()) {
      throw FormatError(std::string(source) + ":" + std::to_string(lineno) +
                        ": ragged line with " + std::to_string(vec.size()) +
                        " components, expected " + std::to_string(table->dimension()));
    }
    if (!table->insert(std::move(token), vec)) ++duplicates;
  }
  if (!table) throw FormatError(std::string(source) + ": no embeddings");
  if (duplicates > 0) {
    warn(std::string(source) + ": " + std::to_string(duplicates) +
         " duplicate token(s) ignored, first occurrence kept");
  }
  return std::move(*table);
}

inline EmbeddingTable load_embeddings(const std::string& path,
                                      std::optional<std::size_t> expected_dim = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file '" + path + "'");
  return load_embeddings(in, expected_dim, path);
}

namespace detail {

// Decodes one UTF-8 code point at s[i], advancing i. Invalid bytes decode as
// themselves.
inline std::uint32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  std::uint32_t cp = b0;
  if (b0 >= 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else if (b0 >= 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if (b0 >= 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  }
  if (len > 1) {
    if (i + len > s.size()) {
      ++i;
      return b0;
    }
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
  }
  i += len;
  return cp;
}

inline bool is_unicode_space(std::uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Non-ASCII code points count as alphanumeric for stripping purposes.
inline bool is_token_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

}  // namespace detail

// Lowercases, splits on Unicode whitespace, and strips leading/trailing
// non-alphanumerics from each token. Empty tokens are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  auto flush = [&](std::string_view raw) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && !detail::is_token_char(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && !detail::is_token_char(static_cast<unsigned char>(raw[e - 1]))) --e;
    if (b == e) return;
    std::string tok(raw.substr(b, e - b));
    for (char& c : tok) {
      if (static_cast<unsigned char>(c) < 0x80) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    tokens.push_back(std::move(tok));
  };
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t here = i;
    const std::uint32_t cp = detail::next_code_point(text, i);
    if (detail::is_unicode_space(cp)) {
      flush(text.substr(start, here - start));
      start = i;
    }
  }
  flush(text.substr(start));
  return tokens;
}

struct FeatureMatrix {
  std::vector<std::size_t> ids;
  Matrix data;
  std::vector<bool> oov;  // true where the document had no in-vocabulary token

  std::size_t rows() const noexcept { return data.rows(); }
  std::size_t dimension() const noexcept { return data.cols(); }
};

inline FeatureMatrix featurize(std::span<const std::string> texts,
                               std::span<const std::size_t> ids,
                               const EmbeddingTable& table) {
  require(texts.size() == ids.size(), "featurize: texts and ids differ in length");
  require(!table.empty(), "featurize: empty embedding table");
  FeatureMatrix out;
  out.ids.assign(ids.begin(), ids.end());
  out.data = Matrix(texts.size(), table.dimension());
  out.oov.assign(texts.size(), true);
  for (std::size_t r = 0; r < texts.size(); ++r) {
    auto row = out.data.row(r);
    std::size_t hits = 0;
    for (const auto& tok : tokenize(texts[r])) {
      if (auto vec = table.find(tok)) {
        for (std::size_t k = 0; k < row.size(); ++k) row[k] += (*vec)[k];
        ++hits;
      }
    }
    if (hits > 0) {
      for (double& v : row) v /= static_cast<double>(hits);
      out.oov[r] = false;
    }
  }
  return out;
}

inline FeatureMatrix featurize(std::span<const Document> docs, const EmbeddingTable& table) {
  std::vector<std::string> texts;
  std::vector<std::size_t> ids;
  texts.reserve(docs.size());
  ids.reserve(docs.size());
  for (const auto& d : docs) {
    texts.push_back(d.text);
    ids.push_back(d.id);
  }
  return featurize(texts, ids, table);
}

// (1 + cos(u, v)) / 2, or 0 when either vector is zero.
inline double cosine_rescaled(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), "cosine_rescaled: length mismatch");
  const double nu = squared_norm(u);
  const double nv = squared_norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  double c = dot(u, v) / std::sqrt(nu * nv);
  c = std::clamp(c, -1.0, 1.0);
  return 0.5 * (1.0 + c);
}

inline double rbf_similarity(std::span<const double> u, std::span<const double> v,
                             double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("rbf gamma must be positive");
  return std::exp(-gamma * squared_distance(u, v));
}

// cosine_raw leaves cosines in [-1, 1]. Negative entries void the
// monotonicity of the facility-location and graph-cut objectives.
enum class Measure { cosine_rescaled, cosine_raw, rbf };

inline std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::cosine_rescaled: return "cosine";
    case Measure::cosine_raw: return "cosine-raw";
    case Measure::rbf: return "rbf";
  }
  return "?";
}

inline Measure parse_measure(std::string_view s) {
  for (Measure m : {Measure::cosine_rescaled, Measure::cosine_raw, Measure::rbf}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown similarity '" + std::string(s) + "'");
}

struct SimilarityOptions {
  Measure measure = Measure::cosine_rescaled;
  double gamma = 1.0;  // rbf only

  friend bool operator==(const SimilarityOptions&, const SimilarityOptions&) = default;
};

struct SimilarityKernel {
  Matrix values;
  Measure measure = Measure::cosine_rescaled;
  std::vector<std::size_t> row_ids;
  std::vector<std::size_t> col_ids;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return values(r, c); }
};

// Which blocks beyond the always-present unlabeled x query block to build.
struct KernelBlocks {
  bool unlabeled_unlabeled = false;
  bool query_query = false;
};

struct KernelSet {
  SimilarityKernel unlabeled_query;
  std::optional<SimilarityKernel> unlabeled_unlabeled;
  std::optional<SimilarityKernel> query_query;
};

inline SimilarityKernel similarity_kernel(const FeatureMatrix& rows, const FeatureMatrix& cols,
                                          const SimilarityOptions& opts = {}) {
  require(rows.dimension() == cols.dimension(),
          "similarity_kernel: feature dimensions differ");
  if (opts.measure == Measure::rbf && !(opts.gamma > 0.0)) {
    throw ConfigError("rbf gamma must be positive");
  }
  SimilarityKernel k;
  k.measure = opts.measure;
  k.row_ids = rows.ids;
  k.col_ids = cols.ids;
  k.values = Matrix(rows.rows(), cols.rows());

  const bool same = &rows == &cols;
  std::vector<double> row_norm(rows.rows()), col_norm(cols.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) row_norm[i] = std::sqrt(squared_norm(rows.data.row(i)));
  for (std::size_t j = 0; j < cols.rows(); ++j) col_norm[j] = std::sqrt(squared_norm(cols.data.row(j)));

  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto u = rows.data.row(i);
    for (std::size_t j = same ? i : 0; j < cols.rows(); ++j) {
      const auto v = cols.data.row(j);
      double s;
      if (opts.measure == Measure::rbf) {
        s = std::exp(-opts.gamma * squared_distance(u, v));
      } else if (row_norm[i] == 0.0 || col_norm[j] == 0.0) {
        s = 0.0;
      } else if (same && i == j) {
        s = 1.0;
      } else {
        const double c = std::clamp(dot(u, v) / (row_norm[i] * col_norm[j]), -1.0, 1.0);
        s = opts.measure == Measure::cosine_raw ? c : 0.5 * (1.0 + c);
      }
      k.values(i, j) = s;
      if (same) k.values(j, i) = s;
    }
  }
  return k;
}

inline KernelSet build_kernels(const FeatureMatrix& unlabeled, const FeatureMatrix& query,
                               const SimilarityOptions& opts, KernelBlocks blocks) {
  require(unlabeled.dimension() == query.dimension(),
          "build_kernels: unlabeled and query feature dimensions differ");
  KernelSet set{similarity_kernel(unlabeled, query, opts), std::nullopt, std::nullopt};
  if (blocks.unlabeled_unlabeled) set.unlabeled_unlabeled = similarity_kernel(unlabeled, unlabeled, opts);
  if (blocks.query_query) set.query_query = similarity_kernel(query, query, opts);
  return set;
}

}  // namespace smisel
