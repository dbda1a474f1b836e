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

// Cardinality-constrained greedy maximization.
//
// All three variants break gain ties toward the lowest element, so the lazy
// and stochastic variants reproduce the naive one exactly whenever their
// preconditions hold (diminishing returns for lazy, a full sample for
// stochastic).

#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "smisel/error.hpp"
#include "smisel/random.hpp"

namespace smisel {

// A mutable selection state that can score and absorb candidates.
template <class S>
concept GainState = requires(S state, const S& cstate, std::size_t a) {
  { cstate.marginal_gain(a) } -> std::convertible_to<double>;
  { cstate.value() } -> std::convertible_to<double>;
  state.update(a);
};

struct SelectionResult {
  std::vector<std::size_t> selected;
  std::vector<double> gains;
  std::vector<double> trajectory;  // objective value after each step
  std::chrono::nanoseconds wall_time{0};
  std::size_t evaluations = 0;
};

enum class GreedyKind { naive, lazy, stochastic };

inline std::string_view to_string(GreedyKind k) {
  switch (k) {
    case GreedyKind::naive: return "naive";
    case GreedyKind::lazy: return "lazy";
    case GreedyKind::stochastic: return "stochastic";
  }
  return "?";
}

inline std::optional<GreedyKind> parse_greedy_kind(std::string_view s) {
  if (s == "naive") return GreedyKind::naive;
  if (s == "lazy") return GreedyKind::lazy;
  if (s == "stochastic") return GreedyKind::stochastic;
  return std::nullopt;
}

namespace detail {

inline void check_budget(std::span<const std::size_t> ground, std::size_t budget) {
  if (budget == 0) throw ConfigError("budget must be at least 1");
  if (budget > ground.size()) {
    throw ConfigError("budget " + std::to_string(budget) + " exceeds ground set size " +
                      std::to_string(ground.size()));
  }
  std::unordered_set<std::size_t> seen;
  for (std::size_t a : ground) {
    require(seen.insert(a).second, "ground set repeats element " + std::to_string(a));
  }
}

// True if (gain, id) beats (best_gain, best_id): higher gain, then lower id.
inline bool better(double gain, std::size_t id, double best_gain, std::size_t best_id) {
  return gain > best_gain || (gain == best_gain && id < best_id);
}

template <GainState State>
void record(State& state, SelectionResult& result, std::size_t pick, double gain) {
  state.update(pick);
  result.selected.push_back(pick);
  result.gains.push_back(gain);
  result.trajectory.push_back((result.trajectory.empty() ? 0.0 : result.trajectory.back()) + gain);
}

}  // namespace detail

template <GainState State>
SelectionResult naive_greedy(State& state, std::span<const std::size_t> ground,
                             std::size_t budget) {
  detail::check_budget(ground, budget);
  const auto start = std::chrono::steady_clock::now();
  SelectionResult result;
  std::vector<bool> taken(ground.size(), false);
  for (std::size_t step = 0; step < budget; ++step) {
    std::size_t best_pos = ground.size();
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < ground.size(); ++p) {
      if (taken[p]) continue;
      const double g = state.marginal_gain(ground[p]);
      ++result.evaluations;
      if (best_pos == ground.size() || detail::better(g, ground[p], best_gain, ground[best_pos])) {
        best_pos = p;
        best_gain = g;
      }
    }
    taken[best_pos] = true;
    detail::record(state, result, ground[best_pos], best_gain);
  }
  result.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

// Accelerated greedy: a max-queue of possibly stale gains keyed by
// (gain, -id). An entry is fresh when it was computed in the current step.
template <GainState State>
SelectionResult lazy_greedy(State& state, std::span<const std::size_t> ground,
                            std::size_t budget) {
  detail::check_budget(ground, budget);
  const auto start = std::chrono::steady_clock::now();
  struct Entry {
    double gain;
    std::size_t id;
    std::size_t stamp;
  };
  auto lower_priority = [](const Entry& a, const Entry& b) {
    return detail::better(b.gain, b.id, a.gain, a.id);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> queue(lower_priority);
  constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();
  for (std::size_t a : ground) queue.push({std::numeric_limits<double>::infinity(), a, kNever});

  SelectionResult result;
  for (std::size_t step = 0; step < budget; ++step) {
    while (true) {
      Entry top = queue.top();
      queue.pop();
      if (top.stamp == step) {
        detail::record(state, result, top.id, top.gain);
        break;
      }
      top.gain = state.marginal_gain(top.id);
      top.stamp = step;
      ++result.evaluations;
      queue.push(top);
    }
  }
  result.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

// ceil((n / budget) * ln(1 / 0.01))
inline std::size_t default_sample_size(std::size_t ground_size, std::size_t budget) {
  if (budget == 0) return ground_size;
  const double s = std::ceil(static_cast<double>(ground_size) / static_cast<double>(budget) *
                             std::log(1.0 / 0.01));
  return std::min(ground_size, static_cast<std::size_t>(std::max(1.0, s)));
}

// Each step maximizes over a fresh uniform sample of the remaining candidates.
template <GainState State>
SelectionResult stochastic_greedy(State& state, std::span<const std::size_t> ground,
                                  std::size_t budget, std::size_t sample_size,
                                  std::uint64_t seed) {
  detail::check_budget(ground, budget);
  if (sample_size == 0) throw ConfigError("stochastic greedy sample size must be positive");
  if (sample_size > ground.size()) {
    throw ConfigError("sample size " + std::to_string(sample_size) +
                      " exceeds ground set size " + std::to_string(ground.size()));
  }
  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  std::vector<std::size_t> remaining(ground.begin(), ground.end());
  SelectionResult result;
  for (std::size_t step = 0; step < budget; ++step) {
    const std::size_t m = std::min(sample_size, remaining.size());
    // Partial Fisher-Yates: the first m slots become the sample.
    if (m < remaining.size()) {
      for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(remaining.size() - i));
        std::swap(remaining[i], remaining[j]);
      }
    }
    std::size_t best_pos = 0;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < m; ++p) {
      const double g = state.marginal_gain(remaining[p]);
      ++result.evaluations;
      if (p == 0 || detail::better(g, remaining[p], best_gain, remaining[best_pos])) {
        best_pos = p;
        best_gain = g;
      }
    }
    const std::size_t pick = remaining[best_pos];
    remaining[best_pos] = remaining.back();
    remaining.pop_back();
    detail::record(state, result, pick, best_gain);
  }
  result.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace smisel
