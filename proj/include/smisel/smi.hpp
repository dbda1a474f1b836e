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

// Submodular mutual information I_F(A; Q) between a candidate set A drawn from
// the unlabeled ground set U and a fixed query set Q.
//
//   FLVMI     sum_{i in U} min(max_{j in A} s_ij, max_{j in Q} s_ij)
//   FLQMI     sum_{i in Q} max_{j in A} s_ij + sum_{i in A} max_{j in Q} s_ij
//   GCMI      2 lambda sum_{i in A} sum_{j in Q} s_ij
//   LOGDETMI  log det(S_A + eps I)
//               - log det(S_A + eps I - S_AQ (S_Q + eps I)^-1 S_QA)
//
// Elements of A are row indices of the unlabeled x query kernel block. The
// harness keeps those rows in ascending document-id order, so "lowest index"
// and "lowest id" coincide for tie-breaking.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smisel/error.hpp"
#include "smisel/kernel.hpp"
#include "smisel/matrix.hpp"

namespace smisel {

enum class Variant { flvmi, flqmi, gcmi, logdetmi };

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::flvmi, Variant::flqmi,
                                                        Variant::gcmi, Variant::logdetmi};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::flvmi: return "flvmi";
    case Variant::flqmi: return "flqmi";
    case Variant::gcmi: return "gcmi";
    case Variant::logdetmi: return "logdetmi";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

inline KernelBlocks required_blocks(Variant v) {
  switch (v) {
    case Variant::flvmi: return {.unlabeled_unlabeled = true, .query_query = false};
    case Variant::logdetmi: return {.unlabeled_unlabeled = true, .query_query = true};
    default: return {};
  }
}

struct SmiParams {
  double lambda = 1.0;            // GCMI
  std::optional<double> epsilon;  // LOGDETMI; default 1e-6 x mean kernel diagonal
};

class SmiObjective {
 public:
  SmiObjective(Variant variant, KernelSet kernels, SmiParams params = {})
      : variant_(variant), kernels_(std::move(kernels)), lambda_(params.lambda) {
    const auto& uq = kernels_.unlabeled_query;
    const std::size_t n = uq.rows();
    const std::size_t q = uq.cols();
    const auto need = required_blocks(variant_);
    if (need.unlabeled_unlabeled) {
      require(kernels_.unlabeled_unlabeled.has_value(),
              std::string(to_string(variant_)) + " needs the unlabeled x unlabeled kernel");
      require(kernels_.unlabeled_unlabeled->rows() == n &&
                  kernels_.unlabeled_unlabeled->cols() == n,
              "unlabeled x unlabeled kernel shape does not match");
    }
    if (need.query_query) {
      require(kernels_.query_query.has_value(),
              std::string(to_string(variant_)) + " needs the query x query kernel");
      require(kernels_.query_query->rows() == q && kernels_.query_query->cols() == q,
              "query x query kernel shape does not match");
    }
    if (!(lambda_ > 0.0)) throw ConfigError("GCMI lambda must be positive");
    epsilon_ = params.epsilon ? *params.epsilon : default_epsilon();
    if (!(epsilon_ > 0.0)) throw ConfigError("LOGDETMI epsilon must be positive");

    query_max_.assign(n, 0.0);
    query_sum_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        query_max_[i] = std::max(query_max_[i], uq(i, j));
        query_sum_[i] += uq(i, j);
      }
    }

    if (variant_ == Variant::logdetmi) {
      // Rows z_i = L_Q^-1 s_{Q,i}, so that s_iQ (S_Q + eps I)^-1 s_Qj = z_i . z_j.
      Matrix lq(q, q);
      for (std::size_t a = 0; a < q; ++a) {
        for (std::size_t b = 0; b < q; ++b) lq(a, b) = (*kernels_.query_query)(a, b);
        lq(a, a) += epsilon_;
      }
      if (!cholesky_in_place(lq)) {
        throw NumericalDegeneracy("query kernel S_Q + eps I is not positive definite");
      }
      whitened_ = Matrix(n, q);
      for (std::size_t i = 0; i < n; ++i) {
        auto z = whitened_.row(i);
        for (std::size_t j = 0; j < q; ++j) z[j] = uq(i, j);
        forward_substitute(lq, z);
      }
    }
  }

  Variant variant() const noexcept { return variant_; }
  double lambda() const noexcept { return lambda_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t ground_size() const noexcept { return kernels_.unlabeled_query.rows(); }
  std::size_t query_size() const noexcept { return kernels_.unlabeled_query.cols(); }
  const KernelSet& kernels() const noexcept { return kernels_; }

  std::size_t document_id(std::size_t index) const {
    const auto& ids = kernels_.unlabeled_query.row_ids;
    return index < ids.size() ? ids[index] : index;
  }

  double query_max(std::size_t i) const { return query_max_[i]; }
  double query_sum(std::size_t i) const { return query_sum_[i]; }
  double sim(std::size_t i, std::size_t j) const { return (*kernels_.unlabeled_unlabeled)(i, j); }
  double cross(std::size_t i, std::size_t j) const { return kernels_.unlabeled_query(i, j); }

  // Entry (i, j) of S_UU + eps I - S_UQ (S_Q + eps I)^-1 S_QU.
  double conditional_sim(std::size_t i, std::size_t j) const {
    double v = sim(i, j) - dot(whitened_.row(i), whitened_.row(j));
    if (i == j) v += epsilon_;
    return v;
  }

  // I_F(A; Q) from scratch.
  double evaluate(std::span<const std::size_t> subset) const {
    check_subset(subset);
    if (subset.empty()) return 0.0;
    const std::size_t n = ground_size();
    const std::size_t q = query_size();
    switch (variant_) {
      case Variant::flvmi: {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double m = 0.0;
          for (std::size_t a : subset) m = std::max(m, sim(i, a));
          total += std::min(m, query_max_[i]);
        }
        return total;
      }
      case Variant::flqmi: {
        double total = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
          double m = 0.0;
          for (std::size_t a : subset) m = std::max(m, cross(a, j));
          total += m;
        }
        for (std::size_t a : subset) total += query_max_[a];
        return total;
      }
      case Variant::gcmi: {
        double total = 0.0;
        for (std::size_t a : subset) total += query_sum_[a];
        return 2.0 * lambda_ * total;
      }
      case Variant::logdetmi:
        return evaluate_logdet(subset);
    }
    return 0.0;
  }

 private:
  double default_epsilon() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto* k : {kernels_.unlabeled_unlabeled ? &*kernels_.unlabeled_unlabeled : nullptr,
                          kernels_.query_query ? &*kernels_.query_query : nullptr}) {
      if (!k) continue;
      for (std::size_t i = 0; i < k->rows(); ++i) sum += (*k)(i, i);
      count += k->rows();
    }
    const double mean = count ? sum / static_cast<double>(count) : 1.0;
    return mean > 0.0 ? 1e-6 * mean : 1e-6;
  }

  void check_subset(std::span<const std::size_t> subset) const {
    std::vector<bool> seen(ground_size(), false);
    for (std::size_t a : subset) {
      require(a < ground_size(), "unknown ground element " + std::to_string(a));
      require(!seen[a], "ground element " + std::to_string(a) + " repeated in subset");
      seen[a] = true;
    }
  }

  double evaluate_logdet(std::span<const std::size_t> subset) const {
    const std::size_t k = subset.size();
    const std::size_t q = query_size();
    const auto& sq = *kernels_.query_query;

    Matrix plain(k, k);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) plain(r, c) = sim(subset[r], subset[c]);
      plain(r, r) += epsilon_;
    }

    // X = (S_Q + eps I)^-1 S_QA via a fresh Cholesky solve.
    Matrix lq(q, q);
    for (std::size_t a = 0; a < q; ++a) {
      for (std::size_t b = 0; b < q; ++b) lq(a, b) = sq(a, b);
      lq(a, a) += epsilon_;
    }
    if (!cholesky_in_place(lq)) {
      throw NumericalDegeneracy("query kernel S_Q + eps I is not positive definite");
    }
    Matrix conditional = plain;
    std::vector<std::vector<double>> w(k, std::vector<double>(q));
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t j = 0; j < q; ++j) w[r][j] = cross(subset[r], j);
      forward_substitute(lq, w[r]);
    }
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) conditional(r, c) -= dot(w[r], w[c]);
    }

    auto logdet = [&](Matrix m, const char* which) {
      if (!cholesky_in_place(m)) {
        throw NumericalDegeneracy(std::string(which) + " matrix is not positive definite");
      }
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) s += 2.0 * std::log(m(i, i));
      return s;
    };
    return logdet(std::move(plain), "S_A + eps I") - logdet(std::move(conditional), "conditional");
  }

  Variant variant_;
  KernelSet kernels_;
  double lambda_;
  double epsilon_ = 0.0;
  std::vector<double> query_max_;
  std::vector<double> query_sum_;
  Matrix whitened_;
};

// Memoized greedy state for one objective: running maxima for the facility
// location variants, and for LOGDETMI the partial Cholesky rows of every
// candidate against the selected set in both the plain and the conditional
// matrix. Single owner; marginal_gain is const and may run concurrently.
class SelectionState {
 public:
  explicit SelectionState(const SmiObjective& objective)
      : objective_(&objective), in_set_(objective.ground_size(), false) {
    const std::size_t n = objective.ground_size();
    switch (objective.variant()) {
      case Variant::flvmi:
        maxima_.assign(n, 0.0);
        break;
      case Variant::flqmi:
        maxima_.assign(objective.query_size(), 0.0);
        break;
      case Variant::gcmi:
        break;
      case Variant::logdetmi:
        plain_rows_.resize(n);
        cond_rows_.resize(n);
        plain_residual_.resize(n);
        cond_residual_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          plain_residual_[i] = objective.sim(i, i) + objective.epsilon();
          cond_residual_[i] = objective.conditional_sim(i, i);
        }
        break;
    }
  }

  const SmiObjective& objective() const noexcept { return *objective_; }
  const std::vector<std::size_t>& selected() const noexcept { return selected_; }
  bool contains(std::size_t a) const { return a < in_set_.size() && in_set_[a]; }
  double value() const noexcept { return value_; }

  // FLVMI: per unlabeled element; FLQMI: per query element. Empty otherwise.
  std::span<const double> running_maxima() const noexcept { return maxima_; }

  double marginal_gain(std::size_t a) const {
    require(a < in_set_.size(), "unknown ground element " + std::to_string(a));
    require(!in_set_[a], "element " + std::to_string(a) + " is already selected");
    const SmiObjective& obj = *objective_;
    switch (obj.variant()) {
      case Variant::flvmi: {
        double gain = 0.0;
        for (std::size_t i = 0; i < maxima_.size(); ++i) {
          const double m = maxima_[i];
          const double s = obj.sim(i, a);
          if (s <= m) continue;
          const double q = obj.query_max(i);
          gain += std::min(s, q) - std::min(m, q);
        }
        return gain;
      }
      case Variant::flqmi: {
        double gain = obj.query_max(a);
        for (std::size_t j = 0; j < maxima_.size(); ++j) {
          gain += std::max(0.0, obj.cross(a, j) - maxima_[j]);
        }
        return gain;
      }
      case Variant::gcmi:
        return 2.0 * obj.lambda() * obj.query_sum(a);
      case Variant::logdetmi: {
        check_residuals(a);
        return std::log(plain_residual_[a]) - std::log(cond_residual_[a]);
      }
    }
    return 0.0;
  }

  void update(std::size_t a) {
    const double gain = marginal_gain(a);
    const SmiObjective& obj = *objective_;
    switch (obj.variant()) {
      case Variant::flvmi:
        for (std::size_t i = 0; i < maxima_.size(); ++i) maxima_[i] = std::max(maxima_[i], obj.sim(i, a));
        break;
      case Variant::flqmi:
        for (std::size_t j = 0; j < maxima_.size(); ++j) maxima_[j] = std::max(maxima_[j], obj.cross(a, j));
        break;
      case Variant::gcmi:
        break;
      case Variant::logdetmi:
        border(a);
        break;
    }
    in_set_[a] = true;
    selected_.push_back(a);
    value_ += gain;
  }

  // Lower Cholesky factor of S_A + eps I in selection order (LOGDETMI).
  Matrix plain_factor() const { return factor(plain_rows_); }
  // Lower Cholesky factor of the conditional matrix (LOGDETMI).
  Matrix conditional_factor() const { return factor(cond_rows_); }

 private:
  void check_residuals(std::size_t a) const {
    if (!(plain_residual_[a] > 0.0) || !(cond_residual_[a] > 0.0)) {
      throw NumericalDegeneracy(
          "non-positive Schur complement for document id " +
          std::to_string(objective_->document_id(a)) + " (plain " +
          std::to_string(plain_residual_[a]) + ", conditional " +
          std::to_string(cond_residual_[a]) + ")");
    }
  }

  // Extends both factors by one bordering step with pivot a.
  void border(std::size_t a) {
    check_residuals(a);
    const SmiObjective& obj = *objective_;
    const double plain_pivot = std::sqrt(plain_residual_[a]);
    const double cond_pivot = std::sqrt(cond_residual_[a]);
    const std::size_t n = in_set_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (in_set_[i] || i == a) continue;
      const double ep = (obj.sim(i, a) - dot(plain_rows_[i], plain_rows_[a])) / plain_pivot;
      const double ec = (obj.conditional_sim(i, a) - dot(cond_rows_[i], cond_rows_[a])) / cond_pivot;
      plain_rows_[i].push_back(ep);
      cond_rows_[i].push_back(ec);
      plain_residual_[i] -= ep * ep;
      cond_residual_[i] -= ec * ec;
    }
    plain_rows_[a].push_back(plain_pivot);
    cond_rows_[a].push_back(cond_pivot);
  }

  Matrix factor(const std::vector<std::vector<double>>& rows) const {
    const std::size_t k = selected_.size();
    Matrix l(k, k);
    if (rows.empty()) return l;
    for (std::size_t r = 0; r < k; ++r) {
      const auto& row = rows[selected_[r]];
      for (std::size_t c = 0; c <= r; ++c) l(r, c) = row[c];
    }
    return l;
  }

  const SmiObjective* objective_;
  std::vector<bool> in_set_;
  std::vector<std::size_t> selected_;
  double value_ = 0.0;
  std::vector<double> maxima_;
  std::vector<std::vector<double>> plain_rows_;
  std::vector<std::vector<double>> cond_rows_;
  std::vector<double> plain_residual_;
  std::vector<double> cond_residual_;
};

}  // namespace smisel
