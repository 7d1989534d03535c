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

#ifndef FEDNER_LLM_BRIDGE_H_
#define FEDNER_LLM_BRIDGE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedner/corpus.h"
#include "fedner/eval.h"

namespace fedner {

// Offline half of the zero-/one-shot LLM comparison: prompt text out,
// recorded responses in, scores through the eval module.

enum class PromptTask { kNer, kRe };
enum class Shot { kZero, kOne };

struct Exemplar {
  std::string input;
  std::string output;
};

struct PromptSpec {
  PromptTask task = PromptTask::kNer;
  std::string entity_type = "disease";  // wording used inside the prompt
  std::string tag;                      // HTML tag name; required, no default
  Shot shot = Shot::kZero;
  std::optional<Exemplar> exemplar;     // required for one-shot, forbidden for zero-shot
  std::vector<std::string> relation_labels;  // choices offered by RE prompts

  void validate() const;
};

// The murine ATP7B disease example, highlighted with `tag`.
Exemplar atp7b_exemplar(std::string_view tag);

std::string build_prompt(const PromptSpec& spec, std::string_view sentence);

// Sentence text with both relation arguments wrapped in <tag>...</tag>.
std::string highlight_relation_arguments(const RelationInstance& instance, std::string_view tag);

struct HighlightDiagnostics {
  size_t regions = 0;         // highlighted regions found
  size_t dropped = 0;         // regions that could not be aligned or overlapped another
  size_t partial = 0;         // regions aligned through a shorter sub-run
  size_t nested_opens = 0;    // flattened
  size_t unclosed = 0;        // open tag running to end of text
  size_t stray_closes = 0;    // close tag without an open one

  size_t recoveries() const { return nested_opens + unclosed + stray_closes; }
  HighlightDiagnostics& operator+=(const HighlightDiagnostics& other);
};

struct HighlightParse {
  std::vector<EntitySpan> spans;  // sorted, non-overlapping, within token bounds
  HighlightDiagnostics diagnostics;
};

// Extracts <tag>...</tag> regions (tag names match case-insensitively) and
// aligns each to the original tokens by the longest contiguous run of its
// words that occurs verbatim there, preferring the occurrence nearest to the
// region's position in the response.
HighlightParse parse_highlights(std::span<const std::string> tokens, std::string_view response,
                                std::string_view tag, std::string_view entity_type);

// Space-joined tokens with every span wrapped in <tag>...</tag>.
std::string serialize_highlights(std::span<const std::string> tokens,
                                 std::span<const EntitySpan> spans, std::string_view tag);

struct ResponseRecord {
  std::string id;
  std::string response;
};

struct PromptRecord {
  std::string id;
  std::string prompt;
};

// Line-delimited JSON objects {"id": ..., "response": ...}; ids must be unique.
std::vector<ResponseRecord> parse_response_records(std::string_view text);
std::string serialize_response_records(std::span<const ResponseRecord> records);
std::string serialize_prompt_records(std::span<const PromptRecord> records);

// Indices of n items drawn uniformly without replacement, in draw order.
std::vector<size_t> sample_test_subset(size_t test_size, size_t n, uint64_t seed);

template <typename T>
std::vector<T> select(std::span<const T> items, std::span<const size_t> indices) {
  std::vector<T> chosen;
  chosen.reserve(indices.size());
  for (size_t i : indices) chosen.push_back(items[i]);
  return chosen;
}

struct GoldSentence {
  std::string id;
  TaggedSentence sentence;
};

struct GoldRelation {
  std::string id;
  RelationInstance instance;
};

struct ScoredResponses {
  EvalReport report;
  HighlightDiagnostics diagnostics;
};

// Scores highlight responses for one entity type: gold spans of other types
// are ignored and every parsed highlight is typed `entity_type`.
ScoredResponses score_ner_responses(std::span<const GoldSentence> gold,
                                    std::span<const ResponseRecord> responses,
                                    std::string_view tag, std::string_view entity_type,
                                    const NerEvalOptions& options = {});

inline constexpr std::string_view kAbstainLabel = "abstain";

// Longest label name contained in the response, ignoring case; ties go to
// the earlier label. Unmapped responses become kAbstainLabel.
std::string map_relation_response(std::string_view response,
                                  std::span<const std::string> labels);

EvalReport score_re_responses(std::span<const GoldRelation> gold,
                              std::span<const ResponseRecord> responses,
                              std::span<const std::string> labels);

}  // namespace fedner

#endif  // FEDNER_LLM_BRIDGE_H_
