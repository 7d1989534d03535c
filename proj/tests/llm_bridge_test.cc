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

#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedner/common.h"
#include "fedner/corpus.h"
#include "fedner/eval.h"
#include "fedner/llm_bridge.h"
#include "fedner/rng.h"
#include "oracles.h"

namespace fedner {
namespace {

using Tokens = std::vector<std::string>;
using Spans = std::vector<EntitySpan>;

PromptSpec ner_spec(Shot shot) {
  PromptSpec spec;
  spec.tag = "span";
  spec.shot = shot;
  if (shot == Shot::kOne) spec.exemplar = atp7b_exemplar(spec.tag);
  return spec;
}

size_t count_lines(const std::string& text) {
  return static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
}

TEST(BuildPrompt, ZeroShotTemplate) {
  const std::string prompt = build_prompt(ner_spec(Shot::kZero), "Patients with flu.");
  EXPECT_EQ(prompt,
            "Task: the task is to extract disease entities in a sentence\n"
            "Input: the input is a sentence.\n"
            "Output: the output is an HTML that highlights all the disease entities in the "
            "sentence. The highlighting should only use HTML tags <span> and </span> and no "
            "other tags.\n"
            "Input: Patients with flu.\n");
  EXPECT_EQ(build_prompt(ner_spec(Shot::kZero), "Patients with flu."), prompt);
}

TEST(BuildPrompt, OneShotCarriesExemplar) {
  const std::string prompt = build_prompt(ner_spec(Shot::kOne), "x");
  EXPECT_NE(prompt.find("Example:\nInput: In summary, inactivation of the murine ATP7B gene"),
            std::string::npos);
  EXPECT_NE(prompt.find("<span>cirrhotic liver disease</span> that resembles "
                        "<span>Wilson disease</span> in humans"),
            std::string::npos);
  EXPECT_EQ(count_lines(prompt), 7u);
  EXPECT_EQ(prompt.substr(prompt.size() - 9), "Input: x\n");
}

TEST(BuildPrompt, ValidationRules) {
  PromptSpec one = ner_spec(Shot::kOne);
  one.exemplar.reset();
  EXPECT_THROW(build_prompt(one, "x"), ValidationError);
  PromptSpec zero = ner_spec(Shot::kZero);
  zero.exemplar = atp7b_exemplar("span");
  EXPECT_THROW(build_prompt(zero, "x"), ValidationError);
  PromptSpec untagged = ner_spec(Shot::kZero);
  untagged.tag.clear();
  EXPECT_THROW(build_prompt(untagged, "x"), ValidationError);
  PromptSpec re;
  re.task = PromptTask::kRe;
  re.tag = "e";
  EXPECT_THROW(build_prompt(re, "x"), ValidationError);
  re.relation_labels = {"treat", "cause"};
  EXPECT_NE(build_prompt(re, "x").find("treat, cause"), std::string::npos);
}

TEST(BuildPrompt, InjectiveInInput) {
  Rng rng(71);
  std::set<std::string> prompts;
  std::set<std::string> inputs;
  for (int i = 0; i < 200; ++i) {
    std::string input;
    for (size_t j = 0; j < rng.uniform_index(4); ++j) input += "ab "[rng.uniform_index(3)];
    if (inputs.insert(input).second) prompts.insert(build_prompt(ner_spec(Shot::kOne), input));
  }
  EXPECT_EQ(prompts.size(), inputs.size());
}

TEST(RelationArguments, Highlighted) {
  const RelationInstance inst{{"aspirin", "treats", "bad", "pain"}, {0, 0}, {2, 3}, "treat"};
  EXPECT_EQ(highlight_relation_arguments(inst, "e"), "<e>aspirin</e> treats <e>bad pain</e>");
}

TEST(ParseHighlights, Examples) {
  const Tokens tokens = {"has", "Wilson", "disease", "now"};
  EXPECT_EQ(parse_highlights(tokens, "has <e>Wilson disease</e> now", "e", "DIS").spans,
            (Spans{{"DIS", 1, 2}}));
  EXPECT_TRUE(parse_highlights(tokens, "has Wilson disease now", "e", "DIS").spans.empty());
  const auto nested = parse_highlights(Tokens{"a", "b"}, "<e>a <e>b</e>", "e", "DIS");
  EXPECT_EQ(nested.spans, (Spans{{"DIS", 0, 1}}));
  EXPECT_EQ(nested.diagnostics.nested_opens, 1u);
}

TEST(ParseHighlights, Recoveries) {
  const Tokens tokens = {"a", "b", "c", "d"};
  const auto unclosed = parse_highlights(tokens, "a <e>b c d", "e", "X");
  EXPECT_EQ(unclosed.spans, (Spans{{"X", 1, 3}}));
  EXPECT_EQ(unclosed.diagnostics.unclosed, 1u);
  const auto stray = parse_highlights(tokens, "a</e> <E>b</E> c d", "e", "X");
  EXPECT_EQ(stray.spans, (Spans{{"X", 1, 1}}));
  EXPECT_EQ(stray.diagnostics.stray_closes, 1u);
  const auto dropped = parse_highlights(tokens, "<e>zzz</e> a b", "e", "X");
  EXPECT_TRUE(dropped.spans.empty());
  EXPECT_EQ(dropped.diagnostics.dropped, 1u);
  // Case-sensitive alignment: "B" is not the token "b".
  EXPECT_TRUE(parse_highlights(tokens, "<e>B</e>", "e", "X").spans.empty());
  // Partial alignment keeps the longest verbatim sub-run.
  const auto partial = parse_highlights(tokens, "<e>b c zzz</e>", "e", "X");
  EXPECT_EQ(partial.spans, (Spans{{"X", 1, 2}}));
  EXPECT_EQ(partial.diagnostics.partial, 1u);
}

TEST(ParseHighlights, PrefersNearestOccurrence) {
  const Tokens tokens = {"flu", "and", "more", "flu"};
  EXPECT_EQ(parse_highlights(tokens, "flu and more <e>flu</e>", "e", "X").spans,
            (Spans{{"X", 3, 3}}));
  EXPECT_EQ(parse_highlights(tokens, "<e>flu</e> and more flu", "e", "X").spans,
            (Spans{{"X", 0, 0}}));
}

TEST(ParseHighlights, RoundTripAndBoundsProperty) {
  Rng rng(72);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t length = 1 + rng.uniform_index(12);
    Tokens tokens(length);
    for (auto& t : tokens) t = "w" + std::to_string(rng.uniform_index(5));
    // Non-adjacent spans: leave a gap token between consecutive spans.
    Spans spans;
    size_t position = rng.uniform_index(2);
    while (position < length && spans.size() < 4) {
      const size_t end = std::min(length - 1, position + rng.uniform_index(3));
      spans.push_back({"X", position, end});
      position = end + 2 + rng.uniform_index(2);
    }
    const std::string text = serialize_highlights(tokens, spans, "e");
    const auto parsed = parse_highlights(tokens, text, "e", "X");
    EXPECT_EQ(parsed.spans, spans) << text;

    // Arbitrary noise never yields out-of-range or overlapping spans.
    std::string noise;
    for (size_t i = 0; i < 12; ++i) {
      const char* pieces[] = {"<e>", "</e>", " w1", " w2", " w0", " q"};
      noise += pieces[rng.uniform_index(6)];
    }
    const auto messy = parse_highlights(tokens, noise, "e", "X");
    for (size_t i = 0; i < messy.spans.size(); ++i) {
      EXPECT_LT(messy.spans[i].end, length);
      if (i > 0) EXPECT_GT(messy.spans[i].start, messy.spans[i - 1].end);
    }
  }
}

TEST(Records, JsonLinesRoundTrip) {
  const std::vector<ResponseRecord> records = {{"a1", "line\none \"quoted\""}, {"7", ""}};
  const std::string text = serialize_response_records(records);
  EXPECT_EQ(count_lines(text), 2u);
  const auto back = parse_response_records(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].response, records[0].response);
  EXPECT_EQ(parse_response_records("{\"id\": 7, \"response\": \"x\"}\n")[0].id, "7");
  EXPECT_THROW(parse_response_records("{\"id\":\"a\",\"response\":\"\"}\n"
                                      "{\"id\":\"a\",\"response\":\"\"}\n"),
               ValidationError);
  EXPECT_THROW(parse_response_records("{\"id\":\"a\"}\n"), ValidationError);
  EXPECT_THROW(parse_response_records("not json\n"), ValidationError);
}

TEST(SampleTestSubset, Rules) {
  const auto all = sample_test_subset(10, 10, 3);
  EXPECT_EQ(std::set<size_t>(all.begin(), all.end()).size(), 10u);
  EXPECT_EQ(sample_test_subset(1266, 200, 5), sample_test_subset(1266, 200, 5));
  const auto subset = sample_test_subset(1266, 200, 5);
  EXPECT_EQ(std::set<size_t>(subset.begin(), subset.end()).size(), 200u);
  for (size_t i : subset) EXPECT_LT(i, 1266u);
  EXPECT_THROW(sample_test_subset(5, 6, 1), ValidationError);
}

std::vector<GoldSentence> gold_set() {
  return {{"s1", {{"has", "Wilson", "disease", "now"}, {"O", "B-DIS", "I-DIS", "O"}}},
          {"s2", {{"flu", "and", "BRCA1"}, {"B-DIS", "O", "B-GENE"}}}};
}

TEST(ScoreNer, EchoedGoldIsPerfect) {
  std::vector<ResponseRecord> responses;
  for (const auto& g : gold_set()) {
    Spans dis;
    for (const auto& s : decode_bio(g.sentence.labels)) if (s.type == "DIS") dis.push_back(s);
    responses.push_back({g.id, serialize_highlights(g.sentence.tokens, dis, "e")});
  }
  const auto scored = score_ner_responses(gold_set(), responses, "e", "DIS");
  EXPECT_DOUBLE_EQ(scored.report.strict_macro, 1.0);
  EXPECT_DOUBLE_EQ(scored.report.lenient_macro, 1.0);
  EXPECT_EQ(scored.diagnostics.regions, 2u);
}

TEST(ScoreNer, EmptyResponsesScoreZero) {
  const std::vector<ResponseRecord> responses = {{"s1", ""}, {"s2", ""}};
  const auto scored = score_ner_responses(gold_set(), responses, "e", "DIS");
  EXPECT_EQ(scored.report.strict_macro, 0.0);
  EXPECT_EQ(scored.report.lenient_macro, 0.0);
}

TEST(ScoreNer, MissingIdsListed) {
  const std::vector<ResponseRecord> responses = {{"s1", ""}};
  try {
    score_ner_responses(gold_set(), responses, "e", "DIS");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("s2"), std::string::npos);
  }
}

TEST(ScoreRe, MappingAndAbstain) {
  const std::vector<std::string> labels = {"treat", "cause", "none"};
  EXPECT_EQ(map_relation_response("The relation is TREAT.", labels), "treat");
  EXPECT_EQ(map_relation_response("no idea", labels), kAbstainLabel);
  const std::vector<std::string> overlapping = {"drug", "drug-dose"};
  EXPECT_EQ(map_relation_response("drug-dose", overlapping), "drug-dose");

  const std::vector<GoldRelation> gold = {{"r1", {{"a", "b"}, {0, 0}, {1, 1}, "treat"}},
                                          {"r2", {{"a", "b"}, {0, 0}, {1, 1}, "cause"}}};
  const std::vector<ResponseRecord> perfect = {{"r1", "treat"}, {"r2", "Cause"}};
  EXPECT_DOUBLE_EQ(score_re_responses(gold, perfect, labels).strict_macro, 1.0);
  const std::vector<ResponseRecord> abstain = {{"r1", "?"}, {"r2", "cause"}};
  EXPECT_DOUBLE_EQ(score_re_responses(gold, abstain, labels).strict_macro, 0.5);
}

}  // namespace
}  // namespace fedner
