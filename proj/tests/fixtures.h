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

#ifndef FEDNER_TESTS_FIXTURES_H_
#define FEDNER_TESTS_FIXTURES_H_

#include <cstddef>
#include <vector>

#include "fedner/model.h"
#include "fedner/rng.h"

namespace fedner::testing {

struct ModelCase {
  ModelSpec spec;
  ParamVector weights;
  Dataset batch;
};

inline ModelSpec small_spec(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  spec.vocab_size = 7;
  spec.label_count = 3;
  spec.embed_dim = 3;
  spec.hidden_dim = 4;
  spec.window_radius = 1;
  return spec;
}

inline Example random_example(const ModelSpec& spec, Rng& rng) {
  const size_t length = 1 + rng.uniform_index(5);
  std::vector<int> tokens(length);
  for (int& token : tokens) token = static_cast<int>(rng.uniform_index(spec.vocab_size));
  if (spec.is_tagger()) {
    std::vector<int> labels(length);
    for (int& label : labels) label = static_cast<int>(rng.uniform_index(spec.label_count));
    return TaggedIds{tokens, labels};
  }
  auto span = [&] {
    const size_t start = rng.uniform_index(length);
    return TokenSpan{start, start + rng.uniform_index(length - start)};
  };
  return RelationIds{tokens, span(), span(), static_cast<int>(rng.uniform_index(spec.label_count))};
}

// Random weights of moderate scale so tanh units are not saturated.
inline ModelCase random_case(ModelKind kind, Rng& rng, size_t batch_size = 3) {
  ModelCase c;
  c.spec = small_spec(kind);
  c.weights = ParamVector(c.spec.layout());
  for (double& v : c.weights.values()) v = rng.uniform(-0.8, 0.8);
  for (size_t i = 0; i < batch_size; ++i) c.batch.push_back(random_example(c.spec, rng));
  return c;
}

}  // namespace fedner::testing

#endif  // FEDNER_TESTS_FIXTURES_H_
