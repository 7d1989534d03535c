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

#include "fedner/model.h"

#include <cmath>
#include <string>

#include "fedner/common.h"
#include "fedner/rng.h"

namespace fedner {
namespace {

constexpr std::string_view kEmbedding = "embedding";
constexpr std::string_view kOutputWeight = "output.weight";
constexpr std::string_view kOutputBias = "output.bias";
constexpr std::string_view kForwardInput = "forward.input";
constexpr std::string_view kForwardRecurrent = "forward.recurrent";
constexpr std::string_view kForwardBias = "forward.bias";
constexpr std::string_view kBackwardInput = "backward.input";
constexpr std::string_view kBackwardRecurrent = "backward.recurrent";
constexpr std::string_view kBackwardBias = "backward.bias";
constexpr std::string_view kEmissionWeight = "emission.weight";
constexpr std::string_view kEmissionBias = "emission.bias";
constexpr std::string_view kTransitions = "crf.transitions";
constexpr std::string_view kFirstMarker = "marker.first";
constexpr std::string_view kSecondMarker = "marker.second";
constexpr std::string_view kHiddenWeight = "hidden.weight";
constexpr std::string_view kHiddenBias = "hidden.bias";

using ConstMap = Eigen::Map<const Matrix>;
using MutableMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using MutableVectorMap = Eigen::Map<Vector>;

ConstMap view(const ParamVector& w, std::string_view name) {
  const Segment& s = w.layout().segment(name);
  return ConstMap(w.values().data() + s.offset, s.rows, s.cols);
}

MutableMap view(ParamVector& w, std::string_view name) {
  const Segment& s = w.layout().segment(name);
  return MutableMap(w.values().data() + s.offset, s.rows, s.cols);
}

ConstVectorMap vector_view(const ParamVector& w, std::string_view name) {
  const Segment& s = w.layout().segment(name);
  return ConstVectorMap(w.values().data() + s.offset, s.length());
}

MutableVectorMap vector_view(ParamVector& w, std::string_view name) {
  const Segment& s = w.layout().segment(name);
  return MutableVectorMap(w.values().data() + s.offset, s.length());
}

int argmax_lowest(const Vector& scores) {
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = static_cast<int>(i);
  }
  return best;
}

// Log-softmax NLL of `gold`; writes softmax - onehot into `delta`.
double softmax_nll(const Vector& logits, int gold, Vector* delta) {
  const double peak = logits.maxCoeff();
  const double log_z = peak + std::log((logits.array() - peak).exp().sum());
  if (delta != nullptr) {
    *delta = (logits.array() - log_z).exp().matrix();
    (*delta)(gold) -= 1.0;
  }
  return log_z - logits(gold);
}

void check_weights(const ModelSpec& spec, const ParamVector& weights) {
  require(weights.layout() == spec.layout(),
          "weight layout does not match the " + std::string(to_string(spec.kind)) +
              " model specification");
}

void check_tokens(const ModelSpec& spec, std::span<const int> tokens) {
  require(!tokens.empty(), "token sequence is empty");
  for (int id : tokens) {
    require(id >= 0 && static_cast<size_t>(id) < spec.vocab_size,
            "token id " + std::to_string(id) + " outside vocabulary of size " +
                std::to_string(spec.vocab_size));
  }
}

void check_label(const ModelSpec& spec, int label) {
  require(label >= 0 && static_cast<size_t>(label) < spec.label_count,
          "label id " + std::to_string(label) + " outside label set of size " +
              std::to_string(spec.label_count));
}

const TaggedIds& as_tagged(const ModelSpec& spec, const Example& example) {
  const auto* tagged = std::get_if<TaggedIds>(&example);
  require(tagged != nullptr, std::string(to_string(spec.kind)) + " expects tagged sentences");
  check_tokens(spec, tagged->tokens);
  require(tagged->labels.size() == tagged->tokens.size(),
          "sentence has different token and label counts");
  for (int label : tagged->labels) check_label(spec, label);
  return *tagged;
}

void check_relation(const ModelSpec& spec, const RelationIds& instance) {
  check_tokens(spec, instance.tokens);
  const size_t length = instance.tokens.size();
  for (const TokenSpan* span : {&instance.first, &instance.second}) {
    require(span->start <= span->end && span->end < length,
            "entity span [" + std::to_string(span->start) + ", " + std::to_string(span->end) +
                "] outside a sentence of " + std::to_string(length) + " tokens");
  }
}

const RelationIds& as_relation(const ModelSpec& spec, const Example& example) {
  const auto* instance = std::get_if<RelationIds>(&example);
  require(instance != nullptr, "relation_classifier expects relation instances");
  check_relation(spec, *instance);
  check_label(spec, instance->label);
  return *instance;
}

// --- window tagger ---------------------------------------------------------

Vector window_features(const ConstMap& embedding, std::span<const int> tokens,
                       size_t position, size_t radius) {
  const Eigen::Index dim = embedding.cols();
  Vector features = Vector::Zero(static_cast<Eigen::Index>(2 * radius + 1) * dim);
  for (size_t k = 0; k < 2 * radius + 1; ++k) {
    const long index = static_cast<long>(position + k) - static_cast<long>(radius);
    if (index < 0 || index >= static_cast<long>(tokens.size())) continue;
    features.segment(static_cast<Eigen::Index>(k) * dim, dim) =
        embedding.row(tokens[index]).transpose();
  }
  return features;
}

double window_sentence(const ModelSpec& spec, const ParamVector& w, const TaggedIds& sentence,
                       ParamVector* grad) {
  const ConstMap embedding = view(w, kEmbedding);
  const ConstMap weight = view(w, kOutputWeight);
  const ConstVectorMap bias = vector_view(w, kOutputBias);
  const Eigen::Index dim = embedding.cols();
  const size_t radius = spec.window_radius;
  double loss = 0.0;
  Vector delta;
  for (size_t t = 0; t < sentence.tokens.size(); ++t) {
    const Vector features = window_features(embedding, sentence.tokens, t, radius);
    const Vector logits = weight * features + bias;
    loss += softmax_nll(logits, sentence.labels[t], grad != nullptr ? &delta : nullptr);
    if (grad == nullptr) continue;
    view(*grad, kOutputWeight).noalias() += delta * features.transpose();
    vector_view(*grad, kOutputBias) += delta;
    const Vector feature_grad = weight.transpose() * delta;
    MutableMap embedding_grad = view(*grad, kEmbedding);
    for (size_t k = 0; k < 2 * radius + 1; ++k) {
      const long index = static_cast<long>(t + k) - static_cast<long>(radius);
      if (index < 0 || index >= static_cast<long>(sentence.tokens.size())) continue;
      embedding_grad.row(sentence.tokens[index]) +=
          feature_grad.segment(static_cast<Eigen::Index>(k) * dim, dim).transpose();
    }
  }
  return loss;
}

// --- recurrent CRF tagger --------------------------------------------------

struct RnnStates {
  Matrix inputs;    // T x D
  Matrix forward;   // T x H
  Matrix backward;  // T x H
  Matrix emissions; // T x L
};

RnnStates run_rnn(const ParamVector& w, std::span<const int> tokens) {
  const ConstMap embedding = view(w, kEmbedding);
  const ConstMap forward_input = view(w, kForwardInput);
  const ConstMap forward_recurrent = view(w, kForwardRecurrent);
  const ConstVectorMap forward_bias = vector_view(w, kForwardBias);
  const ConstMap backward_input = view(w, kBackwardInput);
  const ConstMap backward_recurrent = view(w, kBackwardRecurrent);
  const ConstVectorMap backward_bias = vector_view(w, kBackwardBias);
  const ConstMap emission_weight = view(w, kEmissionWeight);
  const ConstVectorMap emission_bias = vector_view(w, kEmissionBias);

  const auto steps = static_cast<Eigen::Index>(tokens.size());
  const Eigen::Index hidden = forward_recurrent.rows();
  RnnStates states;
  states.inputs.resize(steps, embedding.cols());
  for (Eigen::Index t = 0; t < steps; ++t) states.inputs.row(t) = embedding.row(tokens[t]);

  states.forward.resize(steps, hidden);
  Vector previous = Vector::Zero(hidden);
  for (Eigen::Index t = 0; t < steps; ++t) {
    previous = (forward_input * states.inputs.row(t).transpose() +
                forward_recurrent * previous + forward_bias)
                   .array()
                   .tanh()
                   .matrix();
    states.forward.row(t) = previous.transpose();
  }

  states.backward.resize(steps, hidden);
  Vector next = Vector::Zero(hidden);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    next = (backward_input * states.inputs.row(t).transpose() +
            backward_recurrent * next + backward_bias)
               .array()
               .tanh()
               .matrix();
    states.backward.row(t) = next.transpose();
  }

  states.emissions.resize(steps, emission_weight.rows());
  Vector joined(2 * hidden);
  for (Eigen::Index t = 0; t < steps; ++t) {
    joined << states.forward.row(t).transpose(), states.backward.row(t).transpose();
    states.emissions.row(t) = (emission_weight * joined + emission_bias).transpose();
  }
  return states;
}

double rnn_sentence(const ParamVector& w, const TaggedIds& sentence, ParamVector* grad) {
  const RnnStates states = run_rnn(w, sentence.tokens);
  const ConstMap transitions = view(w, kTransitions);
  if (grad == nullptr) {
    return crf_nll_and_grad(states.emissions, transitions, sentence.labels, nullptr, nullptr);
  }

  const Eigen::Index steps = states.emissions.rows();
  const Eigen::Index hidden = states.forward.cols();
  Matrix emission_grad = Matrix::Zero(steps, states.emissions.cols());
  Matrix transition_grad = Matrix::Zero(transitions.rows(), transitions.cols());
  const double nll = crf_nll_and_grad(states.emissions, transitions, sentence.labels,
                                      &emission_grad, &transition_grad);
  view(*grad, kTransitions) += transition_grad;

  const ConstMap emission_weight = view(w, kEmissionWeight);
  MutableMap emission_weight_grad = view(*grad, kEmissionWeight);
  MutableVectorMap emission_bias_grad = vector_view(*grad, kEmissionBias);
  Matrix forward_grad(steps, hidden);
  Matrix backward_grad(steps, hidden);
  Vector joined(2 * hidden);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Vector delta = emission_grad.row(t).transpose();
    joined << states.forward.row(t).transpose(), states.backward.row(t).transpose();
    emission_weight_grad.noalias() += delta * joined.transpose();
    emission_bias_grad += delta;
    const Vector joined_grad = emission_weight.transpose() * delta;
    forward_grad.row(t) = joined_grad.head(hidden).transpose();
    backward_grad.row(t) = joined_grad.tail(hidden).transpose();
  }

  Matrix input_grad = Matrix::Zero(steps, states.inputs.cols());

  // Left-to-right cell: gradient flows from the last step back to the first.
  {
    const ConstMap input = view(w, kForwardInput);
    const ConstMap recurrent = view(w, kForwardRecurrent);
    MutableMap input_weight_grad = view(*grad, kForwardInput);
    MutableMap recurrent_grad = view(*grad, kForwardRecurrent);
    MutableVectorMap bias_grad = vector_view(*grad, kForwardBias);
    Vector carry = Vector::Zero(hidden);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      const Vector state = states.forward.row(t).transpose();
      const Vector pre = ((forward_grad.row(t).transpose() + carry).array() *
                          (1.0 - state.array().square()))
                             .matrix();
      input_weight_grad.noalias() += pre * states.inputs.row(t);
      if (t > 0) recurrent_grad.noalias() += pre * states.forward.row(t - 1);
      bias_grad += pre;
      input_grad.row(t) += (input.transpose() * pre).transpose();
      carry = recurrent.transpose() * pre;
    }
  }

  // Right-to-left cell: gradient flows from the first step to the last.
  {
    const ConstMap input = view(w, kBackwardInput);
    const ConstMap recurrent = view(w, kBackwardRecurrent);
    MutableMap input_weight_grad = view(*grad, kBackwardInput);
    MutableMap recurrent_grad = view(*grad, kBackwardRecurrent);
    MutableVectorMap bias_grad = vector_view(*grad, kBackwardBias);
    Vector carry = Vector::Zero(hidden);
    for (Eigen::Index t = 0; t < steps; ++t) {
      const Vector state = states.backward.row(t).transpose();
      const Vector pre = ((backward_grad.row(t).transpose() + carry).array() *
                          (1.0 - state.array().square()))
                             .matrix();
      input_weight_grad.noalias() += pre * states.inputs.row(t);
      if (t + 1 < steps) recurrent_grad.noalias() += pre * states.backward.row(t + 1);
      bias_grad += pre;
      input_grad.row(t) += (input.transpose() * pre).transpose();
      carry = recurrent.transpose() * pre;
    }
  }

  MutableMap embedding_grad = view(*grad, kEmbedding);
  for (Eigen::Index t = 0; t < steps; ++t) {
    embedding_grad.row(sentence.tokens[t]) += input_grad.row(t);
  }
  return nll;
}

// --- relation classifier ---------------------------------------------------

struct RelationForward {
  Vector pooled;
  Vector hidden;
  Vector logits;
};

Vector pooled_encoding(const ParamVector& w, const RelationIds& instance) {
  const ConstMap embedding = view(w, kEmbedding);
  const ConstVectorMap first_marker = vector_view(w, kFirstMarker);
  const ConstVectorMap second_marker = vector_view(w, kSecondMarker);
  Vector pooled = Vector::Zero(embedding.cols());
  for (size_t t = 0; t < instance.tokens.size(); ++t) {
    Vector position = embedding.row(instance.tokens[t]).transpose();
    if (instance.first.contains(t)) position += first_marker;
    if (instance.second.contains(t)) position += second_marker;
    pooled += position;
  }
  return pooled / static_cast<double>(instance.tokens.size());
}

RelationForward run_relation(const ParamVector& w, const RelationIds& instance) {
  RelationForward out;
  out.pooled = pooled_encoding(w, instance);
  out.hidden = (view(w, kHiddenWeight) * out.pooled + vector_view(w, kHiddenBias))
                   .array()
                   .tanh()
                   .matrix();
  out.logits = view(w, kOutputWeight) * out.hidden + vector_view(w, kOutputBias);
  return out;
}

double relation_instance(const ParamVector& w, const RelationIds& instance, ParamVector* grad) {
  const RelationForward forward = run_relation(w, instance);
  Vector delta;
  const double nll = softmax_nll(forward.logits, instance.label, grad != nullptr ? &delta : nullptr);
  if (grad == nullptr) return nll;

  view(*grad, kOutputWeight).noalias() += delta * forward.hidden.transpose();
  vector_view(*grad, kOutputBias) += delta;
  const Vector pre = ((view(w, kOutputWeight).transpose() * delta).array() *
                      (1.0 - forward.hidden.array().square()))
                         .matrix();
  view(*grad, kHiddenWeight).noalias() += pre * forward.pooled.transpose();
  vector_view(*grad, kHiddenBias) += pre;
  const Vector position_grad = (view(w, kHiddenWeight).transpose() * pre) /
                               static_cast<double>(instance.tokens.size());
  MutableMap embedding_grad = view(*grad, kEmbedding);
  MutableVectorMap first_grad = vector_view(*grad, kFirstMarker);
  MutableVectorMap second_grad = vector_view(*grad, kSecondMarker);
  for (size_t t = 0; t < instance.tokens.size(); ++t) {
    embedding_grad.row(instance.tokens[t]) += position_grad.transpose();
    if (instance.first.contains(t)) first_grad += position_grad;
    if (instance.second.contains(t)) second_grad += position_grad;
  }
  return nll;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kWindowTagger: return "window_tagger";
    case ModelKind::kRnnCrfTagger: return "rnn_crf_tagger";
    case ModelKind::kRelationClassifier: return "relation_classifier";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "window_tagger") return ModelKind::kWindowTagger;
  if (name == "rnn_crf_tagger") return ModelKind::kRnnCrfTagger;
  if (name == "relation_classifier") return ModelKind::kRelationClassifier;
  throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  require(vocab_size >= 1, "model vocab_size must be at least 1");
  require(label_count >= 1, "model label_count must be at least 1");
  require(embed_dim >= 1, "model embed_dim must be at least 1");
  require(hidden_dim >= 1, "model hidden_dim must be at least 1");
}

Layout ModelSpec::layout() const {
  validate();
  Layout layout;
  layout.add(std::string(kEmbedding), vocab_size, embed_dim);
  switch (kind) {
    case ModelKind::kWindowTagger:
      layout.add(std::string(kOutputWeight), label_count, (2 * window_radius + 1) * embed_dim);
      layout.add(std::string(kOutputBias), 1, label_count);
      break;
    case ModelKind::kRnnCrfTagger:
      layout.add(std::string(kForwardInput), hidden_dim, embed_dim);
      layout.add(std::string(kForwardRecurrent), hidden_dim, hidden_dim);
      layout.add(std::string(kForwardBias), 1, hidden_dim);
      layout.add(std::string(kBackwardInput), hidden_dim, embed_dim);
      layout.add(std::string(kBackwardRecurrent), hidden_dim, hidden_dim);
      layout.add(std::string(kBackwardBias), 1, hidden_dim);
      layout.add(std::string(kEmissionWeight), label_count, 2 * hidden_dim);
      layout.add(std::string(kEmissionBias), 1, label_count);
      layout.add(std::string(kTransitions), label_count, label_count);
      break;
    case ModelKind::kRelationClassifier:
      layout.add(std::string(kFirstMarker), 1, embed_dim);
      layout.add(std::string(kSecondMarker), 1, embed_dim);
      layout.add(std::string(kHiddenWeight), hidden_dim, embed_dim);
      layout.add(std::string(kHiddenBias), 1, hidden_dim);
      layout.add(std::string(kOutputWeight), label_count, hidden_dim);
      layout.add(std::string(kOutputBias), 1, label_count);
      break;
  }
  return layout;
}

size_t ModelSpec::param_count() const {
  validate();
  const size_t v = vocab_size, l = label_count, d = embed_dim, h = hidden_dim;
  switch (kind) {
    case ModelKind::kWindowTagger:
      return v * d + l * (2 * window_radius + 1) * d + l;
    case ModelKind::kRnnCrfTagger:
      return v * d + 2 * (h * d + h * h + h) + l * 2 * h + l + l * l;
    case ModelKind::kRelationClassifier:
      return v * d + 2 * d + h * d + h + l * h + l;
  }
  return 0;
}

ParamVector init_params(const ModelSpec& spec, uint64_t seed) {
  ParamVector weights(spec.layout());
  Rng rng(derive_seed(seed, 0x1a17));
  for (const Segment& segment : weights.layout().segments()) {
    if (segment.name == kTransitions) continue;
    const double scale = std::sqrt(6.0 / static_cast<double>(segment.rows + segment.cols));
    for (size_t i = segment.offset; i < segment.offset + segment.length(); ++i) {
      weights[i] = rng.uniform(-scale, scale);
    }
  }
  return weights;
}

LossGrad loss_and_grad(const ModelSpec& spec, const ParamVector& weights,
                       std::span<const Example* const> batch) {
  check_weights(spec, weights);
  require(!batch.empty(), "batch is empty");
  LossGrad result{0.0, ParamVector(weights.layout())};
  for (const Example* example : batch) {
    switch (spec.kind) {
      case ModelKind::kWindowTagger:
        result.loss += window_sentence(spec, weights, as_tagged(spec, *example), &result.grad);
        break;
      case ModelKind::kRnnCrfTagger:
        result.loss += rnn_sentence(weights, as_tagged(spec, *example), &result.grad);
        break;
      case ModelKind::kRelationClassifier:
        result.loss += relation_instance(weights, as_relation(spec, *example), &result.grad);
        break;
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  result.loss *= scale;
  for (double& g : result.grad.values()) g *= scale;
  return result;
}

LossGrad loss_and_grad(const ModelSpec& spec, const ParamVector& weights,
                       std::span<const Example> batch) {
  std::vector<const Example*> pointers;
  pointers.reserve(batch.size());
  for (const Example& example : batch) pointers.push_back(&example);
  return loss_and_grad(spec, weights, pointers);
}

Matrix rnn_emissions(const ModelSpec& spec, const ParamVector& weights,
                     std::span<const int> tokens) {
  require(spec.kind == ModelKind::kRnnCrfTagger, "rnn_emissions needs an rnn_crf_tagger");
  check_weights(spec, weights);
  check_tokens(spec, tokens);
  return run_rnn(weights, tokens).emissions;
}

std::vector<int> predict_tags(const ModelSpec& spec, const ParamVector& weights,
                              std::span<const int> tokens) {
  require(spec.is_tagger(), "predict_tags needs a tagger model");
  check_weights(spec, weights);
  check_tokens(spec, tokens);
  if (spec.kind == ModelKind::kRnnCrfTagger) {
    return crf_viterbi(run_rnn(weights, tokens).emissions, view(weights, kTransitions));
  }
  const ConstMap embedding = view(weights, kEmbedding);
  const ConstMap weight = view(weights, kOutputWeight);
  const ConstVectorMap bias = vector_view(weights, kOutputBias);
  std::vector<int> labels(tokens.size());
  for (size_t t = 0; t < tokens.size(); ++t) {
    labels[t] = argmax_lowest(weight * window_features(embedding, tokens, t, spec.window_radius) +
                              bias);
  }
  return labels;
}

Vector relation_encoding(const ModelSpec& spec, const ParamVector& weights,
                         const RelationIds& instance) {
  require(spec.kind == ModelKind::kRelationClassifier,
          "relation_encoding needs a relation_classifier");
  check_weights(spec, weights);
  check_relation(spec, instance);
  return pooled_encoding(weights, instance);
}

Vector relation_scores(const ModelSpec& spec, const ParamVector& weights,
                       const RelationIds& instance) {
  require(spec.kind == ModelKind::kRelationClassifier,
          "relation_scores needs a relation_classifier");
  check_weights(spec, weights);
  check_relation(spec, instance);
  return run_relation(weights, instance).logits;
}

int predict_relation(const ModelSpec& spec, const ParamVector& weights,
                     const RelationIds& instance) {
  return argmax_lowest(relation_scores(spec, weights, instance));
}

}  // namespace fedner
