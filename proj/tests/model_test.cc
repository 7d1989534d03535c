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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fedner/common.h"
#include "fedner/crf.h"
#include "fedner/model.h"
#include "fedner/optim.h"
#include "fixtures.h"
#include "oracles.h"

namespace fedner {
namespace {

using testing::check_gradient;
using testing::random_case;
using testing::small_spec;

constexpr ModelKind kAllKinds[] = {ModelKind::kWindowTagger, ModelKind::kRnnCrfTagger,
                                   ModelKind::kRelationClassifier};

TEST(ModelSpec, ParamCountMatchesLayout) {
  for (ModelKind kind : kAllKinds) {
    for (size_t d : {1, 2, 5}) {
      ModelSpec spec = small_spec(kind);
      spec.embed_dim = d;
      spec.hidden_dim = d + 1;
      spec.window_radius = d - 1;
      const Layout layout = spec.layout();
      size_t total = 0;
      for (const Segment& s : layout.segments()) total += s.length();
      EXPECT_EQ(spec.param_count(), total) << to_string(kind);
      EXPECT_EQ(spec.layout().size(), total);
    }
  }
}

TEST(ModelSpec, LayoutSegmentsTile) {
  for (ModelKind kind : kAllKinds) {
    const Layout layout = small_spec(kind).layout();
    size_t offset = 0;
    for (const Segment& s : layout.segments()) {
      EXPECT_EQ(s.offset, offset);
      offset += s.length();
    }
  }
}

TEST(ModelSpec, KindNamesRoundTrip) {
  for (ModelKind kind : kAllKinds) EXPECT_EQ(parse_model_kind(to_string(kind)), kind);
  EXPECT_THROW(parse_model_kind("transformer"), ValidationError);
}

TEST(InitParams, Deterministic) {
  for (ModelKind kind : kAllKinds) {
    EXPECT_EQ(init_params(small_spec(kind), 5), init_params(small_spec(kind), 5));
    EXPECT_NE(init_params(small_spec(kind), 5), init_params(small_spec(kind), 6));
  }
}

TEST(InitParams, RejectsZeroDims) {
  ModelSpec spec = small_spec(ModelKind::kRnnCrfTagger);
  spec.embed_dim = 0;
  EXPECT_THROW(init_params(spec, 1), ValidationError);
  spec = small_spec(ModelKind::kWindowTagger);
  spec.label_count = 0;
  EXPECT_THROW(init_params(spec, 1), ValidationError);
}

TEST(InitParams, TransitionsZeroAndGlorotBounds) {
  const ModelSpec spec = small_spec(ModelKind::kRnnCrfTagger);
  const ParamVector w = init_params(spec, 3);
  for (double v : w.segment("crf.transitions")) EXPECT_EQ(v, 0.0);
  const Layout layout = spec.layout();
  for (const Segment& s : layout.segments()) {
    if (s.name == "crf.transitions") continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    for (double v : w.segment(s.name)) EXPECT_LE(std::abs(v), bound) << s.name;
  }
}

TEST(LossAndGrad, UniformWindowTaggerGivesLogL) {
  ModelSpec spec = small_spec(ModelKind::kWindowTagger);
  spec.label_count = 5;
  const ParamVector w(spec.layout());
  const Dataset batch = {TaggedIds{{2}, {3}}};
  const LossGrad lg = loss_and_grad(spec, w, batch);
  EXPECT_NEAR(lg.loss, std::log(5.0), 1e-12);
  EXPECT_EQ(lg.grad.layout(), w.layout());
}

TEST(LossAndGrad, RnnCrfMatchesPathEnumeration) {
  ModelSpec spec = small_spec(ModelKind::kRnnCrfTagger);
  spec.label_count = 2;
  Rng rng(21);
  ParamVector w(spec.layout());
  for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
  const TaggedIds sentence{{1, 4}, {1, 0}};
  const Matrix emissions = rnn_emissions(spec, w, sentence.tokens);
  Eigen::Map<const Matrix> transitions(w.segment("crf.transitions").data(), 2, 2);
  const Matrix trans = transitions;
  const double want = testing::brute_log_partition(emissions, trans) -
                      testing::brute_path_score(emissions, trans, sentence.labels);
  const Dataset batch = {sentence};
  EXPECT_NEAR(loss_and_grad(spec, w, batch).loss, want, 1e-10);
}

TEST(LossAndGrad, MeanOverBatch) {
  Rng rng(22);
  for (ModelKind kind : kAllKinds) {
    const auto c = random_case(kind, rng, 4);
    double sum = 0.0;
    for (const Example& e : c.batch) {
      sum += loss_and_grad(c.spec, c.weights, std::span<const Example>(&e, 1)).loss;
    }
    EXPECT_NEAR(loss_and_grad(c.spec, c.weights, c.batch).loss, sum / 4.0, 1e-10);
  }
}

TEST(LossAndGrad, GradientMatchesFiniteDifferences) {
  Rng rng(23);
  for (ModelKind kind : kAllKinds) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto c = random_case(kind, rng);
      const LossGrad lg = loss_and_grad(c.spec, c.weights, c.batch);
      EXPECT_TRUE(std::isfinite(lg.loss));
      EXPECT_GE(lg.loss, 0.0);
      const auto check = check_gradient(
          [&](const ParamVector& w) { return loss_and_grad(c.spec, w, c.batch).loss; },
          c.weights, lg.grad);
      EXPECT_LT(check.worst_relative_error, 1e-4) << to_string(kind) << " trial " << trial;
    }
  }
}

TEST(LossAndGrad, RejectsBadInputs) {
  const ModelSpec spec = small_spec(ModelKind::kRnnCrfTagger);
  const ParamVector w(spec.layout());
  const Dataset bad_label = {TaggedIds{{1}, {3}}};
  EXPECT_THROW(loss_and_grad(spec, w, bad_label), ValidationError);
  const Dataset bad_token = {TaggedIds{{7}, {0}}};
  EXPECT_THROW(loss_and_grad(spec, w, bad_token), ValidationError);
  const Dataset empty;
  EXPECT_THROW(loss_and_grad(spec, w, empty), ValidationError);
  const Dataset fine = {TaggedIds{{1}, {0}}};
  EXPECT_THROW(loss_and_grad(spec, ParamVector(small_spec(ModelKind::kWindowTagger).layout()), fine),
               ValidationError);
  const Dataset wrong_kind = {RelationIds{{1, 2}, {0, 0}, {1, 1}, 0}};
  EXPECT_THROW(loss_and_grad(spec, w, wrong_kind), ValidationError);
}

TEST(PredictTags, ZeroModelPredictsLabelZero) {
  for (ModelKind kind : {ModelKind::kWindowTagger, ModelKind::kRnnCrfTagger}) {
    const ModelSpec spec = small_spec(kind);
    const std::vector<int> tokens = {0, 3, 6, 2};
    EXPECT_EQ(predict_tags(spec, ParamVector(spec.layout()), tokens), std::vector<int>(4, 0));
  }
}

TEST(PredictTags, RejectsOutOfRangeToken) {
  const ModelSpec spec = small_spec(ModelKind::kWindowTagger);
  const std::vector<int> tokens = {0, 9};
  EXPECT_THROW(predict_tags(spec, ParamVector(spec.layout()), tokens), ValidationError);
}

ParamVector overfit(const ModelSpec& spec, const Dataset& data, int steps) {
  ParamVector w = init_params(spec, 9);
  OptimizerState state = OptimizerState::make_adam(w.layout());
  for (int i = 0; i < steps; ++i) {
    const LossGrad lg = loss_and_grad(spec, w, data);
    apply_step_in_place(state, w, lg.grad, 0.05);
  }
  return w;
}

TEST(PredictTags, OverfitSentenceRecoversGold) {
  for (ModelKind kind : {ModelKind::kWindowTagger, ModelKind::kRnnCrfTagger}) {
    const ModelSpec spec = small_spec(kind);
    const TaggedIds sentence{{1, 5, 5, 2, 6}, {0, 1, 2, 0, 1}};
    const Dataset data = {sentence};
    const ParamVector w = overfit(spec, data, 300);
    EXPECT_LT(loss_and_grad(spec, w, data).loss, 0.05) << to_string(kind);
    EXPECT_EQ(predict_tags(spec, w, sentence.tokens), sentence.labels);
    EXPECT_EQ(predict_tags(spec, w, sentence.tokens), predict_tags(spec, w, sentence.tokens));
  }
}

TEST(PredictRelation, ZeroWeightsUniform) {
  const ModelSpec spec = small_spec(ModelKind::kRelationClassifier);
  const RelationIds inst{{1, 2, 3}, {0, 0}, {2, 2}, 1};
  const ParamVector w(spec.layout());
  EXPECT_EQ(predict_relation(spec, w, inst), 0);
  const Vector scores = relation_scores(spec, w, inst);
  EXPECT_EQ(scores.size(), 3);
  EXPECT_EQ(scores.maxCoeff(), scores.minCoeff());
}

TEST(PredictRelation, OverfitRecoversGold) {
  const ModelSpec spec = small_spec(ModelKind::kRelationClassifier);
  const RelationIds inst{{1, 2, 3, 4}, {0, 1}, {3, 3}, 2};
  const Dataset data = {inst};
  const ParamVector w = overfit(spec, data, 200);
  EXPECT_EQ(predict_relation(spec, w, inst), 2);
}

TEST(PredictRelation, RejectsSpanOutOfBounds) {
  const ModelSpec spec = small_spec(ModelKind::kRelationClassifier);
  const ParamVector w(spec.layout());
  EXPECT_THROW(predict_relation(spec, w, RelationIds{{1, 2}, {0, 0}, {1, 2}, 0}), ValidationError);
  EXPECT_THROW(predict_relation(spec, w, RelationIds{{1, 2}, {1, 0}, {1, 1}, 0}), ValidationError);
}

TEST(RelationEncoding, HandComputedTwoTokens) {
  ModelSpec spec = small_spec(ModelKind::kRelationClassifier);
  spec.vocab_size = 2;
  spec.embed_dim = 2;
  ParamVector w(spec.layout());
  auto e = w.segment("embedding");
  e[0] = 1.0, e[1] = 2.0;   // token 0
  e[2] = 3.0, e[3] = -1.0;  // token 1
  auto m1 = w.segment("marker.first");
  m1[0] = 10.0, m1[1] = 0.0;
  auto m2 = w.segment("marker.second");
  m2[0] = 0.0, m2[1] = 20.0;

  // Symmetric sentence: same token at both positions.
  const RelationIds forward{{0, 0}, {0, 0}, {1, 1}, 0};
  const RelationIds swapped{{0, 0}, {1, 1}, {0, 0}, 0};
  const Vector a = relation_encoding(spec, w, forward);
  const Vector b = relation_encoding(spec, w, swapped);
  // mean of (E0 + M1) and (E0 + M2)
  EXPECT_DOUBLE_EQ(a(0), (1.0 + 10.0 + 1.0 + 0.0) / 2.0);
  EXPECT_DOUBLE_EQ(a(1), (2.0 + 0.0 + 2.0 + 20.0) / 2.0);
  EXPECT_DOUBLE_EQ(b(0), a(0));
  EXPECT_DOUBLE_EQ(b(1), a(1));

  // Asymmetric tokens: the swap moves marker mass between positions only.
  const RelationIds mixed{{0, 1}, {0, 0}, {1, 1}, 0};
  const RelationIds mixed_swap{{0, 1}, {1, 1}, {0, 0}, 0};
  const Vector c = relation_encoding(spec, w, mixed);
  const Vector d = relation_encoding(spec, w, mixed_swap);
  EXPECT_DOUBLE_EQ(c(0), (1.0 + 10.0 + 3.0 + 0.0) / 2.0);
  EXPECT_DOUBLE_EQ(c(1), (2.0 + 0.0 - 1.0 + 20.0) / 2.0);
  EXPECT_DOUBLE_EQ(d(0), (1.0 + 0.0 + 3.0 + 10.0) / 2.0);
  EXPECT_DOUBLE_EQ(d(1), (2.0 + 20.0 - 1.0 + 0.0) / 2.0);
}

}  // namespace
}  // namespace fedner
