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

#ifndef FEDNER_MODEL_H_
#define FEDNER_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedner/crf.h"
#include "fedner/param_vector.h"

namespace fedner {

enum class ModelKind { kWindowTagger, kRnnCrfTagger, kRelationClassifier };

std::string_view to_string(ModelKind kind);
// Accepts "window_tagger", "rnn_crf_tagger", "relation_classifier".
ModelKind parse_model_kind(std::string_view name);

// Shape of one of the three desk-scale models.
//
//   window_tagger        softmax over the concatenated embeddings of the
//                        2r+1 tokens around each position (zero padding).
//   rnn_crf_tagger       embeddings -> left-to-right and right-to-left tanh
//                        Elman cells -> per-token emission scores -> linear
//                        chain CRF.
//   relation_classifier  mean of token embeddings, with one learned marker
//                        vector added at first-span positions and another at
//                        second-span positions -> tanh layer -> softmax.
//
// hidden_dim is unused by the window tagger and window_radius only matters
// to it, but both must still validate.
struct ModelSpec {
  ModelKind kind = ModelKind::kWindowTagger;
  size_t vocab_size = 0;
  size_t label_count = 0;
  size_t embed_dim = 0;
  size_t hidden_dim = 0;
  size_t window_radius = 1;

  void validate() const;
  Layout layout() const;
  // Closed-form parameter count; equals layout().size().
  size_t param_count() const;
  bool is_tagger() const { return kind != ModelKind::kRelationClassifier; }

  bool operator==(const ModelSpec&) const = default;
};

// Inclusive token range [start, end].
struct TokenSpan {
  size_t start = 0;
  size_t end = 0;

  size_t length() const { return end - start + 1; }
  bool contains(size_t position) const { return start <= position && position <= end; }
  bool operator==(const TokenSpan&) const = default;
};

// A sentence encoded as vocabulary ids with one label id per token.
struct TaggedIds {
  std::vector<int> tokens;
  std::vector<int> labels;
  bool operator==(const TaggedIds&) const = default;
};

// A sentence with two entity spans and the id of their relation.
struct RelationIds {
  std::vector<int> tokens;
  TokenSpan first;
  TokenSpan second;
  int label = 0;
  bool operator==(const RelationIds&) const = default;
};

using Example = std::variant<TaggedIds, RelationIds>;
using Dataset = std::vector<Example>;

struct LossGrad {
  double loss = 0.0;  // mean negative log-likelihood over the batch
  ParamVector grad;
};

// Glorot-uniform per segment, s = sqrt(6 / (rows + cols)); CRF transitions
// start at zero. Deterministic in (spec, seed).
ParamVector init_params(const ModelSpec& spec, uint64_t seed);

// Mean NLL over the batch and its exact gradient.
LossGrad loss_and_grad(const ModelSpec& spec, const ParamVector& weights,
                       std::span<const Example* const> batch);
LossGrad loss_and_grad(const ModelSpec& spec, const ParamVector& weights,
                       std::span<const Example> batch);

// Per-token emission scores (T x L) of the recurrent tagger.
Matrix rnn_emissions(const ModelSpec& spec, const ParamVector& weights,
                     std::span<const int> tokens);

// Per-token argmax for the window tagger, Viterbi path for the CRF tagger.
std::vector<int> predict_tags(const ModelSpec& spec, const ParamVector& weights,
                              std::span<const int> tokens);

// Pooled sentence encoding that feeds the relation classifier head.
Vector relation_encoding(const ModelSpec& spec, const ParamVector& weights,
                         const RelationIds& instance);

// Class scores of the relation classifier.
Vector relation_scores(const ModelSpec& spec, const ParamVector& weights,
                       const RelationIds& instance);

// Argmax class; ties go to the lowest id.
int predict_relation(const ModelSpec& spec, const ParamVector& weights,
                     const RelationIds& instance);

}  // namespace fedner

#endif  // FEDNER_MODEL_H_
