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

#ifndef FEDNER_OPTIM_H_
#define FEDNER_OPTIM_H_

#include <cstdint>
#include <string_view>
#include <utility>

#include "fedner/model.h"
#include "fedner/param_vector.h"

namespace fedner {

enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

// Per-worker optimizer state. The moment accumulators are only populated for
// Adam and always share the weight layout.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  int64_t step_count = 0;
  AdamConfig adam;
  ParamVector first_moment;
  ParamVector second_moment;

  static OptimizerState sgd();
  static OptimizerState make_adam(const Layout& layout, AdamConfig config = {});
  static OptimizerState make(OptimizerKind kind, const Layout& layout, AdamConfig config = {});
};

// Linear warmup to base_lr, then linear decay to zero at total_steps.
struct Schedule {
  double base_lr = 1e-3;
  int64_t warmup_steps = 0;
  int64_t total_steps = 1;

  void validate() const;
};

double lr_at(const Schedule& schedule, int64_t step);

// (mu / 2) * ||w - anchor||^2 around the round-start global weights.
struct ProximalTerm {
  double mu = 0.0;
  const ParamVector& anchor;
};

double proximal_penalty(const ParamVector& weights, const ProximalTerm& prox);

// Adds the proximal penalty to the loss and mu * (w - anchor) to the gradient.
LossGrad proximal_augment(LossGrad loss_grad, const ParamVector& weights,
                          const ProximalTerm& prox);
void proximal_augment_in_place(LossGrad& loss_grad, const ParamVector& weights,
                               const ProximalTerm& prox);

// One update: sgd is w - lr * g; adam is the bias-corrected Adam step.
// Rejects a non-finite gradient, naming the offending segment.
std::pair<OptimizerState, ParamVector> apply_step(OptimizerState state, ParamVector weights,
                                                  const ParamVector& grad, double lr);
void apply_step_in_place(OptimizerState& state, ParamVector& weights, const ParamVector& grad,
                         double lr);

}  // namespace fedner

#endif  // FEDNER_OPTIM_H_
