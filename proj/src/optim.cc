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

#include "fedner/optim.h"

#include <cmath>
#include <string>

#include "fedner/common.h"

namespace fedner {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

OptimizerState OptimizerState::sgd() { return OptimizerState{}; }

OptimizerState OptimizerState::make_adam(const Layout& layout, AdamConfig config) {
  require(config.beta1 >= 0.0 && config.beta1 < 1.0, "adam beta1 must lie in [0, 1)");
  require(config.beta2 >= 0.0 && config.beta2 < 1.0, "adam beta2 must lie in [0, 1)");
  require(config.epsilon > 0.0, "adam epsilon must be positive");
  OptimizerState state;
  state.kind = OptimizerKind::kAdam;
  state.adam = config;
  state.first_moment = ParamVector(layout);
  state.second_moment = ParamVector(layout);
  return state;
}

OptimizerState OptimizerState::make(OptimizerKind kind, const Layout& layout,
                                    AdamConfig config) {
  return kind == OptimizerKind::kSgd ? sgd() : make_adam(layout, config);
}

void Schedule::validate() const {
  require(base_lr > 0.0, "learning rate must be positive");
  require(warmup_steps >= 0, "warmup steps must be non-negative");
  require(total_steps > warmup_steps, "total steps must exceed warmup steps");
}

double lr_at(const Schedule& schedule, int64_t step) {
  if (step < schedule.warmup_steps) {
    return schedule.base_lr * static_cast<double>(step) /
           static_cast<double>(schedule.warmup_steps);
  }
  if (step > schedule.total_steps) return 0.0;
  return schedule.base_lr * static_cast<double>(schedule.total_steps - step) /
         static_cast<double>(schedule.total_steps - schedule.warmup_steps);
}

double proximal_penalty(const ParamVector& weights, const ProximalTerm& prox) {
  require_same_layout(weights, prox.anchor, "proximal term");
  double squared = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double d = weights[i] - prox.anchor[i];
    squared += d * d;
  }
  return 0.5 * prox.mu * squared;
}

void proximal_augment_in_place(LossGrad& loss_grad, const ParamVector& weights,
                               const ProximalTerm& prox) {
  require(prox.mu >= 0.0, "proximal mu must be non-negative");
  require_same_layout(loss_grad.grad, weights, "proximal term");
  loss_grad.loss += proximal_penalty(weights, prox);
  for (size_t i = 0; i < weights.size(); ++i) {
    loss_grad.grad[i] += prox.mu * (weights[i] - prox.anchor[i]);
  }
}

LossGrad proximal_augment(LossGrad loss_grad, const ParamVector& weights,
                          const ProximalTerm& prox) {
  proximal_augment_in_place(loss_grad, weights, prox);
  return loss_grad;
}

void apply_step_in_place(OptimizerState& state, ParamVector& weights, const ParamVector& grad,
                         double lr) {
  require(lr >= 0.0, "learning rate must be non-negative");
  require_same_layout(weights, grad, "optimizer step");
  if (auto bad = grad.first_non_finite_segment()) {
    throw ValidationError("non-finite gradient in segment '" + *bad + "'");
  }
  ++state.step_count;
  if (state.kind == OptimizerKind::kSgd) {
    for (size_t i = 0; i < weights.size(); ++i) weights[i] -= lr * grad[i];
    return;
  }

  require_same_layout(weights, state.first_moment, "adam first moment");
  require_same_layout(weights, state.second_moment, "adam second moment");
  const AdamConfig& c = state.adam;
  const double step = static_cast<double>(state.step_count);
  const double first_correction = 1.0 - std::pow(c.beta1, step);
  const double second_correction = 1.0 - std::pow(c.beta2, step);
  for (size_t i = 0; i < weights.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * grad[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m / first_correction;
    const double v_hat = v / second_correction;
    weights[i] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

std::pair<OptimizerState, ParamVector> apply_step(OptimizerState state, ParamVector weights,
                                                  const ParamVector& grad, double lr) {
  apply_step_in_place(state, weights, grad, lr);
  return {std::move(state), std::move(weights)};
}

}  // namespace fedner
