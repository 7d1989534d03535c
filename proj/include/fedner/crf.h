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

#ifndef FEDNER_CRF_H_
#define FEDNER_CRF_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fedner {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

// Linear-chain CRF over T positions and L labels. `emissions` is T x L;
// `transitions(i, j)` scores label i followed by label j. A path scores
//   sum_t emissions(t, y_t) + sum_{t>0} transitions(y_{t-1}, y_t).

// Numerically stable log-sum-exp of a non-empty range.
double log_sum_exp(std::span<const double> values);

double crf_path_score(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions,
                      std::span<const int> labels);

// log of the sum of exp(path score) over all L^T paths (forward recursion).
double crf_log_partition(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions);

// Highest-scoring path. Among equal-scoring paths the lexicographically
// smallest label sequence wins, so all-zero scores decode to all zeros.
std::vector<int> crf_viterbi(const ConstMatrixRef& emissions,
                             const ConstMatrixRef& transitions);

// Negative log-likelihood of `gold`. When the gradient pointers are non-null
// the exact gradient is *added* to them (emission grad is T x L, transition
// grad L x L): node/edge marginals minus gold indicator counts.
double crf_nll_and_grad(const ConstMatrixRef& emissions, const ConstMatrixRef& transitions,
                        std::span<const int> gold, Matrix* emissions_grad,
                        Matrix* transitions_grad);

}  // namespace fedner

#endif  // FEDNER_CRF_H_
