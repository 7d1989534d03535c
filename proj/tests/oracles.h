// Copyright 2026 The fedner Authors.
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

#ifndef FEDNER_TESTS_ORACLES_H_
#define FEDNER_TESTS_ORACLES_H_

// Independent reference implementations used only by tests. None of these
// share code paths with the library routines they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fedner/crf.h"
#include "fedner/eval.h"
#include "fedner/model.h"
#include "fedner/rng.h"

namespace fedner::testing {

// All L^T label sequences in lexicographic order.
inline std::vector<std::vector<int>> enumerate_paths(size_t steps, size_t labels) {
  std::vector<std::vector<int>> paths;
  std::vector<int> path(steps, 0);
  while (true) {
    paths.push_back(path);
    size_t t = steps;
    while (t > 0) {
      --t;
      if (++path[t] < static_cast<int>(labels)) break;
      path[t] = 0;
      if (t == 0) return paths;
    }
    if (steps == 0) return paths;
  }
}

inline double brute_path_score(const Matrix& emissions, const Matrix& transitions,
                               const std::vector<int>& path) {
  double score = 0.0;
  for (size_t t = 0; t < path.size(); ++t) {
    score += emissions(t, path[t]);
    if (t > 0) score += transitions(path[t - 1], path[t]);
  }
  return score;
}

// log sum_paths exp(score), accumulated naively with a max shift.
inline double brute_log_partition(const Matrix& emissions, const Matrix& transitions) {
  const auto paths = enumerate_paths(emissions.rows(), emissions.cols());
  std::vector<double> scores;
  for (const auto& path : paths) scores.push_back(brute_path_score(emissions, transitions, path));
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - peak);
  return peak + std::log(sum);
}

// First path (lexicographic order) with the maximal score.
inline std::vector<int> brute_argmax_path(const Matrix& emissions, const Matrix& transitions) {
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& path : enumerate_paths(emissions.rows(), emissions.cols())) {
    const double score = brute_path_score(emissions, transitions, path);
    if (score > best_score) {
      best_score = score;
      best = path;
    }
  }
  return best;
}

inline Matrix random_matrix(Rng& rng, size_t rows, size_t cols, double scale) {
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
  }
  return m;
}

struct GradientCheck {
  double worst_relative_error = 0.0;
  size_t worst_index = 0;
};

// Central differences of `loss` at `weights` with step h, compared with the
// analytic gradient. Relative error uses max(|analytic|, |numeric|, floor).
inline GradientCheck check_gradient(const std::function<double(const ParamVector&)>& loss,
                                    const ParamVector& weights, const ParamVector& analytic,
                                    double h = 1e-4, double floor = 1e-3) {
  GradientCheck result;
  ParamVector probe = weights;
  for (size_t i = 0; i < weights.size(); ++i) {
    probe[i] = weights[i] + h;
    const double up = loss(probe);
    probe[i] = weights[i] - h;
    const double down = loss(probe);
    probe[i] = weights[i];
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double error = std::abs(analytic[i] - numeric) / scale;
    if (error > result.worst_relative_error) {
      result.worst_relative_error = error;
      result.worst_index = i;
    }
  }
  return result;
}

// Maximum bipartite matching size between predictions and gold spans where
// an edge means (same type unless type_free) and token overlap. Augmenting
// paths; exact for any graph.
inline size_t max_matching(const std::vector<EntitySpan>& gold,
                           const std::vector<EntitySpan>& predicted, bool type_free,
                           bool exact_boundaries) {
  std::vector<int> gold_owner(gold.size(), -1);
  auto edge = [&](size_t p, size_t g) {
    if (!type_free && gold[g].type != predicted[p].type) return false;
    if (exact_boundaries) return gold[g].start == predicted[p].start && gold[g].end == predicted[p].end;
    return gold[g].start <= predicted[p].end && predicted[p].start <= gold[g].end;
  };
  std::function<bool(size_t, std::vector<bool>&)> augment = [&](size_t p,
                                                                std::vector<bool>& seen) {
    for (size_t g = 0; g < gold.size(); ++g) {
      if (!edge(p, g) || seen[g]) continue;
      seen[g] = true;
      if (gold_owner[g] < 0 || augment(static_cast<size_t>(gold_owner[g]), seen)) {
        gold_owner[g] = static_cast<int>(p);
        return true;
      }
    }
    return false;
  };
  size_t matched = 0;
  for (size_t p = 0; p < predicted.size(); ++p) {
    std::vector<bool> seen(gold.size(), false);
    if (augment(p, seen)) ++matched;
  }
  return matched;
}

// Spans decoded independently of decode_bio from a random label draw: a
// random set of non-overlapping typed intervals over `length` tokens.
inline std::vector<EntitySpan> random_spans(Rng& rng, size_t length, size_t max_spans,
                                            const std::vector<std::string>& types) {
  std::vector<EntitySpan> spans;
  size_t position = 0;
  while (spans.size() < max_spans && position < length) {
    position += rng.uniform_index(3);
    if (position >= length) break;
    const size_t end = std::min(length - 1, position + rng.uniform_index(3));
    spans.push_back(EntitySpan{types[rng.uniform_index(types.size())], position, end});
    position = end + 1;
  }
  return spans;
}

// Plain weighted mean, coded directly from the definition.
inline std::vector<double> weighted_mean(const std::vector<std::vector<double>>& weights,
                                         const std::vector<size_t>& sizes) {
  double total = 0.0;
  for (size_t n : sizes) total += static_cast<double>(n);
  std::vector<double> mean(weights.front().size(), 0.0);
  for (size_t j = 0; j < mean.size(); ++j) {
    double acc = 0.0;
    for (size_t k = 0; k < weights.size(); ++k) acc += static_cast<double>(sizes[k]) * weights[k][j];
    mean[j] = acc / total;
  }
  return mean;
}

}  // namespace fedner::testing

#endif  // FEDNER_TESTS_ORACLES_H_
