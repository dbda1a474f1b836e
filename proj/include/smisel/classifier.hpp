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

// Softmax regression over averaged embeddings, trained by mini-batch SGD,
// and the confusion-matrix metrics used to score it.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "smisel/error.hpp"
#include "smisel/matrix.hpp"
#include "smisel/random.hpp"

namespace smisel {

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double l2 = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (l2 < 0.0) throw ConfigError("l2 penalty must be non-negative");
  }
};

// Row-wise softmax, shifted by the row maximum.
inline void softmax_in_place(std::span<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logits) v /= z;
}

class SoftmaxClassifier {
 public:
  SoftmaxClassifier() = default;
  SoftmaxClassifier(std::size_t num_classes, std::size_t feature_dim)
      : weights_(num_classes, feature_dim), bias_(num_classes, 0.0) {
    require(num_classes >= 1 && feature_dim >= 1, "classifier needs positive shape");
  }

  std::size_t num_classes() const noexcept { return weights_.rows(); }
  std::size_t feature_dim() const noexcept { return weights_.cols(); }
  std::size_t trained_epochs() const noexcept { return trained_epochs_; }
  void set_trained_epochs(std::size_t e) { trained_epochs_ = e; }

  Matrix& weights() noexcept { return weights_; }
  const Matrix& weights() const noexcept { return weights_; }
  std::vector<double>& bias() noexcept { return bias_; }
  const std::vector<double>& bias() const noexcept { return bias_; }

  void logits(std::span<const double> x, std::span<double> out) const {
    require(x.size() == feature_dim(), "feature dimension " + std::to_string(x.size()) +
                                           " does not match model dimension " +
                                           std::to_string(feature_dim()));
    for (std::size_t c = 0; c < num_classes(); ++c) out[c] = dot(weights_.row(c), x) + bias_[c];
  }

  Matrix predict_proba(const Matrix& features) const {
    Matrix probs(features.rows(), num_classes());
    for (std::size_t r = 0; r < features.rows(); ++r) {
      logits(features.row(r), probs.row(r));
      softmax_in_place(probs.row(r));
    }
    return probs;
  }

  std::vector<int> predict(const Matrix& features) const {
    const Matrix p = predict_proba(features);
    std::vector<int> out(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) {
      const auto row = p.row(r);
      out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
  }

  friend bool operator==(const SoftmaxClassifier&, const SoftmaxClassifier&) = default;

 private:
  Matrix weights_;
  std::vector<double> bias_;
  std::size_t trained_epochs_ = 0;
};

struct LossGradient {
  double loss = 0.0;
  Matrix weights;  // d loss / d W
  std::vector<double> bias;
};

// Mean cross-entropy (plus l2/2 ||W||^2) over the rows listed in `rows`, or
// over all rows when `rows` is empty.
inline LossGradient loss_and_gradient(const SoftmaxClassifier& model, const Matrix& features,
                                      std::span<const int> labels, double l2 = 0.0,
                                      std::span<const std::size_t> rows = {}) {
  require(features.rows() == labels.size(), "features and labels differ in length");
  const std::size_t k = model.num_classes();
  const std::size_t d = model.feature_dim();
  LossGradient out{0.0, Matrix(k, d), std::vector<double>(k, 0.0)};
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(features.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  std::vector<double> p(k);
  for (std::size_t r : rows) {
    const auto x = features.row(r);
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < k, "label out of range");
    model.logits(x, p);
    softmax_in_place(p);
    out.loss -= std::log(std::max(p[static_cast<std::size_t>(y)], std::numeric_limits<double>::min()));
    for (std::size_t c = 0; c < k; ++c) {
      const double delta = p[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
      out.bias[c] += delta;
      auto g = out.weights.row(c);
      for (std::size_t j = 0; j < d; ++j) g[j] += delta * x[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  out.loss *= inv;
  for (double& v : out.weights.data()) v *= inv;
  for (double& v : out.bias) v *= inv;
  if (l2 > 0.0) {
    const auto w = model.weights().data();
    auto g = out.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      out.loss += 0.5 * l2 * w[i] * w[i];
      g[i] += l2 * w[i];
    }
  }
  return out;
}

// Mini-batch SGD on mean cross-entropy. Rows are reshuffled every epoch from
// a generator seeded by config.seed.
inline SoftmaxClassifier train(const Matrix& features, std::span<const int> labels,
                               std::size_t num_classes, const TrainConfig& config) {
  config.validate();
  if (features.rows() == 0) throw ConfigError("cannot train on an empty training set");
  require(features.rows() == labels.size(), "features and labels differ in length");
  const std::set<int> distinct(labels.begin(), labels.end());
  for (int y : distinct) {
    require(y >= 0 && static_cast<std::size_t>(y) < num_classes, "label out of range");
  }

  SoftmaxClassifier model(num_classes, features.cols());
  const bool single_class = distinct.size() < 2;
  if (single_class) {
    warn("training data has a single class (" + std::to_string(*distinct.begin()) +
         "); fitting bias only");
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      const auto g = loss_and_gradient(model, features, labels, config.l2,
                                       std::span<const std::size_t>(order).subspan(b, e - b));
      if (!single_class) {
        auto w = model.weights().data();
        const auto gw = g.weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * gw[i];
      }
      for (std::size_t c = 0; c < num_classes; ++c) {
        model.bias()[c] -= config.learning_rate * g.bias[c];
      }
    }
  }
  model.set_trained_epochs(config.epochs);
  return model;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double rare_class_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

inline MetricsReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion,
                                            int rare_class) {
  const std::size_t k = confusion.size();
  require(rare_class >= 0 && static_cast<std::size_t>(rare_class) < k, "rare class out of range");
  MetricsReport m;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<std::size_t> predicted(k, 0);
  for (std::size_t t = 0; t < k; ++t) {
    require(confusion[t].size() == k, "confusion matrix must be square");
    for (std::size_t p = 0; p < k; ++p) {
      total += confusion[t][p];
      predicted[p] += confusion[t][p];
    }
    correct += confusion[t][t];
  }
  require(total > 0, "empty confusion matrix");
  m.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  m.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& pc = m.per_class[c];
    pc.support = std::accumulate(confusion[c].begin(), confusion[c].end(), std::size_t{0});
    const double tp = static_cast<double>(confusion[c][c]);
    pc.precision = predicted[c] ? tp / static_cast<double>(predicted[c]) : 0.0;
    pc.recall = pc.support ? tp / static_cast<double>(pc.support) : 0.0;
    pc.f1 = f1_score(pc.precision, pc.recall);
  }
  m.rare_class_f1 = m.per_class[static_cast<std::size_t>(rare_class)].f1;
  m.confusion = std::move(confusion);
  return m;
}

inline MetricsReport evaluate(const SoftmaxClassifier& model, const Matrix& features,
                              std::span<const int> labels, int rare_class) {
  require(features.rows() > 0, "cannot evaluate on an empty test set");
  require(features.rows() == labels.size(), "features and labels differ in length");
  const std::size_t k = model.num_classes();
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  const auto pred = model.predict(features);
  for (std::size_t r = 0; r < pred.size(); ++r) {
    require(labels[r] >= 0 && static_cast<std::size_t>(labels[r]) < k, "label out of range");
    ++confusion[static_cast<std::size_t>(labels[r])][static_cast<std::size_t>(pred[r])];
  }
  return metrics_from_confusion(std::move(confusion), rare_class);
}

// Checkpoint text format, version 1:
//
//   smisel-softmax 1
//   <feature_dim> <num_classes> <trained_epochs>
//   <num_classes lines of feature_dim weights>
//   <one line of num_classes biases>
//
// Values are written with 17 significant digits and round-trip exactly.
inline void save_checkpoint(std::ostream& out, const SoftmaxClassifier& model) {
  out << "smisel-softmax 1\n"
      << model.feature_dim() << ' ' << model.num_classes() << ' ' << model.trained_epochs() << '\n'
      << std::setprecision(17);
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    const auto row = model.weights().row(c);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
  for (std::size_t c = 0; c < model.num_classes(); ++c) out << (c ? " " : "") << model.bias()[c];
  out << '\n';
  if (!out) throw IoError("failed writing checkpoint");
}

inline SoftmaxClassifier load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "smisel-softmax") {
    throw FormatError("not a smisel-softmax checkpoint");
  }
  if (version != 1) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  std::size_t dim = 0, classes = 0, epochs = 0;
  if (!(in >> dim >> classes >> epochs) || dim == 0 || classes == 0) {
    throw FormatError("bad checkpoint header");
  }
  SoftmaxClassifier model(classes, dim);
  for (double& w : model.weights().data()) {
    if (!(in >> w)) throw FormatError("truncated checkpoint weights");
  }
  for (double& b : model.bias()) {
    if (!(in >> b)) throw FormatError("truncated checkpoint bias");
  }
  model.set_trained_epochs(epochs);
  return model;
}

}  // namespace smisel
