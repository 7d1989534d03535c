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

#include "fedner/crf.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedner/common.h"

namespace fedner {
namespace {

void check_shapes(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions) {
  require(emissions.rows() >= 1 && emissions.cols() >= 1,
          "CRF emissions must be a non-empty T x L matrix");
  require(transitions.rows() == emissions.cols() && transitions.cols() == emissions.cols(),
          "CRF transitions must be L x L with L = emission columns");
}

// alpha(t, j): log-sum of scores of all prefixes ending in label j at t.
Matrix forward_scores(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions) {
  const Eigen::Index steps = emissions.rows();
  const Eigen::Index labels = emissions.cols();
  Matrix alpha(steps, labels);
  alpha.row(0) = emissions.row(0);
  std::vector<double> terms(labels);
  for (Eigen::Index t = 1; t < steps; ++t) {
    for (Eigen::Index j = 0; j < labels; ++j) {
      for (Eigen::Index i = 0; i < labels; ++i) terms[i] = alpha(t - 1, i) + transitions(i, j);
      alpha(t, j) = log_sum_exp(terms) + emissions(t, j);
    }
  }
  return alpha;
}

// beta(t, i): log-sum of scores of all suffixes after t given label i at t.
Matrix backward_scores(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions) {
  const Eigen::Index steps = emissions.rows();
  const Eigen::Index labels = emissions.cols();
  Matrix beta = Matrix::Zero(steps, labels);
  std::vector<double> terms(labels);
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < labels; ++i) {
      for (Eigen::Index j = 0; j < labels; ++j) {
        terms[j] = transitions(i, j) + emissions(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = log_sum_exp(terms);
    }
  }
  return beta;
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  require(!values.empty(), "log_sum_exp of an empty range");
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

double crf_path_score(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions,
                      std::span<const int> labels) {
  check_shapes(emissions, transitions);
  require(static_cast<Eigen::Index>(labels.size()) == emissions.rows(),
          "CRF path length differs from emission rows");
  double score = 0.0;
  for (size_t t = 0; t < labels.size(); ++t) {
    require(labels[t] >= 0 && labels[t] < emissions.cols(), "CRF label id out of range");
    score += emissions(t, labels[t]);
    if (t > 0) score += transitions(labels[t - 1], labels[t]);
  }
  return score;
}

double crf_log_partition(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions) {
  check_shapes(emissions, transitions);
  const Matrix alpha = forward_scores(emissions, transitions);
  const Eigen::RowVectorXd last = alpha.row(alpha.rows() - 1);
  return log_sum_exp(std::span<const double>(last.data(), last.size()));
}

std::vector<int> crf_viterbi(const ConstMatrixRef& emissions,
                             const ConstMatrixRef& transitions) {
  check_shapes(emissions, transitions);
  const Eigen::Index steps = emissions.rows();
  const Eigen::Index labels = emissions.cols();
  // best(t, i): best suffix score from t onwards given label i at t. Decoding
  // front to back and keeping the first maximizer yields the
  // lexicographically smallest optimal path.
  Matrix best(steps, labels);
  best.row(steps - 1) = emissions.row(steps - 1);
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < labels; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < labels; ++j) {
        top = std::max(top, transitions(i, j) + best(t + 1, j));
      }
      best(t, i) = emissions(t, i) + top;
    }
  }

  std::vector<int> path(steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    int chosen = 0;
    double chosen_score = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < labels; ++j) {
      const double score = t == 0 ? best(0, j) : transitions(path[t - 1], j) + best(t, j);
      if (score > chosen_score) {
        chosen_score = score;
        chosen = static_cast<int>(j);
      }
    }
    path[t] = chosen;
  }
  return path;
}

double crf_nll_and_grad(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions,
                        std::span<const int> gold, Matrix* emissions_grad,
                        Matrix* transitions_grad) {
  const double gold_score = crf_path_score(emissions, transitions, gold);
  const Matrix alpha = forward_scores(emissions, transitions);
  const Eigen::Index steps = emissions.rows();
  const Eigen::Index labels = emissions.cols();
  const Eigen::RowVectorXd last = alpha.row(steps - 1);
  const double log_z = log_sum_exp(std::span<const double>(last.data(), last.size()));
  // The forward sum always dominates the gold path; clamp rounding noise.
  const double nll = std::max(0.0, log_z - gold_score);
  if (emissions_grad == nullptr && transitions_grad == nullptr) return nll;

  const Matrix beta = backward_scores(emissions, transitions);
  if (emissions_grad != nullptr) {
    require(emissions_grad->rows() == steps && emissions_grad->cols() == labels,
            "CRF emission gradient has the wrong shape");
    for (Eigen::Index t = 0; t < steps; ++t) {
      for (Eigen::Index j = 0; j < labels; ++j) {
        (*emissions_grad)(t, j) += std::exp(alpha(t, j) + beta(t, j) - log_z);
      }
      (*emissions_grad)(t, gold[t]) -= 1.0;
    }
  }
  if (transitions_grad != nullptr) {
    require(transitions_grad->rows() == labels && transitions_grad->cols() == labels,
            "CRF transition gradient has the wrong shape");
    for (Eigen::Index t = 1; t < steps; ++t) {
      for (Eigen::Index i = 0; i < labels; ++i) {
        for (Eigen::Index j = 0; j < labels; ++j) {
          (*transitions_grad)(i, j) += std::exp(alpha(t - 1, i) + transitions(i, j) +
                                                emissions(t, j) + beta(t, j) - log_z);
        }
      }
      (*transitions_grad)(gold[t - 1], gold[t]) -= 1.0;
    }
  }
  return nll;
}

}  // namespace fedner
