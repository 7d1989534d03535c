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

#include "fedner/llm_bridge.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <set>

#include "fedner/common.h"
#include "fedner/rng.h"
#include "json.hpp"

namespace fedner {
namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool starts_with_ignore_case(std::string_view text, size_t at, std::string_view prefix) {
  if (text.size() - at < prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[at + i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::string join(std::span<const std::string> words, std::string_view separator) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += separator;
    out += words[i];
  }
  return out;
}

struct Region {
  size_t begin = 0;  // word index, inclusive
  size_t end = 0;    // word index, exclusive
};

// Longest run words[i, i+len) of the region found verbatim in `tokens`.
// Among equally long runs, the one whose implied region start lies closest
// to `hint` wins; remaining ties go to the leftmost token position.
std::optional<std::pair<size_t, size_t>> align(std::span<const std::string> tokens,
                                               std::span<const std::string> region, size_t hint) {
  for (size_t length = std::min(region.size(), tokens.size()); length > 0; --length) {
    std::optional<std::pair<size_t, size_t>> best;
    long best_distance = 0;
    for (size_t i = 0; i + length <= region.size(); ++i) {
      for (size_t p = 0; p + length <= tokens.size(); ++p) {
        if (!std::equal(region.begin() + i, region.begin() + i + length, tokens.begin() + p)) {
          continue;
        }
        const long distance = std::labs(static_cast<long>(p) - static_cast<long>(i) -
                                        static_cast<long>(hint));
        if (!best || distance < best_distance ||
            (distance == best_distance && p < best->first)) {
          best = {p, p + length - 1};
          best_distance = distance;
        }
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

}  // namespace

void PromptSpec::validate() const {
  require(!tag.empty(), "prompt needs a non-empty HTML tag name");
  if (shot == Shot::kOne) {
    require(exemplar.has_value(), "one-shot prompts need an exemplar");
  } else {
    require(!exemplar.has_value(), "zero-shot prompts must not carry an exemplar");
  }
  if (task == PromptTask::kNer) {
    require(!entity_type.empty(), "NER prompts need an entity type");
  } else {
    require(!relation_labels.empty(), "RE prompts need the relation label choices");
  }
}

Exemplar atp7b_exemplar(std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  Exemplar exemplar;
  exemplar.input =
      "In summary, inactivation of the murine ATP7B gene produces a form of cirrhotic liver "
      "disease that resembles Wilson disease in humans and toxic milk phenotype in the mouse";
  exemplar.output = "In summary, inactivation of the murine ATP7B gene produces a form of " +
                    open + "cirrhotic liver disease" + close + " that resembles " + open +
                    "Wilson disease" + close +
                    " in humans and toxic milk phenotype in the mouse";
  return exemplar;
}

std::string build_prompt(const PromptSpec& spec, std::string_view sentence) {
  spec.validate();
  const std::string open = "<" + spec.tag + ">";
  const std::string close = "</" + spec.tag + ">";
  std::string prompt;
  if (spec.task == PromptTask::kNer) {
    prompt += "Task: the task is to extract " + spec.entity_type + " entities in a sentence\n";
    prompt += "Input: the input is a sentence.\n";
    prompt += "Output: the output is an HTML that highlights all the " + spec.entity_type +
              " entities in the sentence. The highlighting should only use HTML tags " + open +
              " and " + close + " and no other tags.\n";
  } else {
    prompt += "Task: the task is to classify the relation between the two highlighted entities "
              "in a sentence\n";
    prompt += "Input: the input is a sentence in which the two entities are highlighted with "
              "HTML tags " + open + " and " + close + ".\n";
    prompt += "Output: the output is exactly one of the following relation labels: " +
              join(spec.relation_labels, ", ") + ".\n";
  }
  if (spec.exemplar) {
    prompt += "Example:\n";
    prompt += "Input: " + spec.exemplar->input + "\n";
    prompt += "Output: " + spec.exemplar->output + "\n";
  }
  prompt += "Input: ";
  prompt += sentence;
  prompt += "\n";
  return prompt;
}

std::string highlight_relation_arguments(const RelationInstance& instance, std::string_view tag) {
  validate_relation(instance);
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::string out;
  for (size_t i = 0; i < instance.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    for (const TokenSpan& span : {instance.first, instance.second}) {
      if (span.start == i) out += open;
    }
    out += instance.tokens[i];
    for (const TokenSpan& span : {instance.first, instance.second}) {
      if (span.end == i) out += close;
    }
  }
  return out;
}

HighlightDiagnostics& HighlightDiagnostics::operator+=(const HighlightDiagnostics& other) {
  regions += other.regions;
  dropped += other.dropped;
  partial += other.partial;
  nested_opens += other.nested_opens;
  unclosed += other.unclosed;
  stray_closes += other.stray_closes;
  return *this;
}

HighlightParse parse_highlights(std::span<const std::string> tokens, std::string_view response,
                                std::string_view tag, std::string_view entity_type) {
  require(!tag.empty(), "highlight tag name must be non-empty");
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";

  HighlightParse result;
  std::vector<std::string> words;
  std::vector<Region> regions;
  std::string word;
  size_t depth = 0;
  size_t region_begin = 0;
  auto flush = [&] {
    if (!word.empty()) words.push_back(std::move(word));
    word.clear();
  };
  for (size_t i = 0; i < response.size();) {
    if (starts_with_ignore_case(response, i, open)) {
      flush();
      if (depth == 0) {
        region_begin = words.size();
      } else {
        ++result.diagnostics.nested_opens;
      }
      ++depth;
      i += open.size();
    } else if (starts_with_ignore_case(response, i, close)) {
      flush();
      if (depth == 0) {
        ++result.diagnostics.stray_closes;
      } else if (--depth == 0) {
        regions.push_back(Region{region_begin, words.size()});
      }
      i += close.size();
    } else {
      if (std::isspace(static_cast<unsigned char>(response[i]))) {
        flush();
      } else {
        word += response[i];
      }
      ++i;
    }
  }
  flush();
  if (depth > 0) {
    ++result.diagnostics.unclosed;
    regions.push_back(Region{region_begin, words.size()});
  }

  result.diagnostics.regions = regions.size();
  for (const Region& region : regions) {
    const std::span<const std::string> region_words(words.data() + region.begin,
                                                    region.end - region.begin);
    const auto aligned = align(tokens, region_words, region.begin);
    if (!aligned) {
      ++result.diagnostics.dropped;
      continue;
    }
    EntitySpan span{std::string(entity_type), aligned->first, aligned->second};
    const bool clashes = std::any_of(result.spans.begin(), result.spans.end(),
                                     [&](const EntitySpan& s) { return s.overlaps(span); });
    if (clashes) {
      ++result.diagnostics.dropped;
      continue;
    }
    if (span.end - span.start + 1 < region_words.size()) ++result.diagnostics.partial;
    result.spans.push_back(std::move(span));
  }
  std::sort(result.spans.begin(), result.spans.end());
  return result;
}

std::string serialize_highlights(std::span<const std::string> tokens,
                                 std::span<const EntitySpan> spans, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    for (const EntitySpan& span : spans) {
      if (span.start == i) out += open;
    }
    out += tokens[i];
    for (const EntitySpan& span : spans) {
      if (span.end == i) out += close;
    }
  }
  return out;
}

std::vector<ResponseRecord> parse_response_records(std::string_view text) {
  std::vector<ResponseRecord> records;
  std::set<std::string> ids;
  size_t line_number = 0;
  size_t begin = 0;
  while (begin < text.size()) {
    size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "response line " + std::to_string(line_number) + ": ";
    nlohmann::json object;
    try {
      object = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(where + e.what());
    }
    require(object.is_object() && object.contains("id") && object.contains("response"),
            where + "expected an object with fields id and response");
    ResponseRecord record;
    const auto& id = object["id"];
    require(id.is_string() || id.is_number_integer(), where + "id must be a string or integer");
    record.id = id.is_string() ? id.get<std::string>() : std::to_string(id.get<long long>());
    require(object["response"].is_string(), where + "response must be a string");
    record.response = object["response"].get<std::string>();
    require(ids.insert(record.id).second, where + "duplicate id '" + record.id + "'");
    records.push_back(std::move(record));
  }
  return records;
}

std::string serialize_response_records(std::span<const ResponseRecord> records) {
  std::string out;
  for (const ResponseRecord& record : records) {
    nlohmann::ordered_json line;
    line["id"] = record.id;
    line["response"] = record.response;
    out += line.dump() + "\n";
  }
  return out;
}

std::string serialize_prompt_records(std::span<const PromptRecord> records) {
  std::string out;
  for (const PromptRecord& record : records) {
    nlohmann::ordered_json line;
    line["id"] = record.id;
    line["prompt"] = record.prompt;
    out += line.dump() + "\n";
  }
  return out;
}

std::vector<size_t> sample_test_subset(size_t test_size, size_t n, uint64_t seed) {
  require(n <= test_size, "cannot sample " + std::to_string(n) + " items from a test set of " +
                              std::to_string(test_size));
  std::vector<size_t> indices(test_size);
  for (size_t i = 0; i < test_size; ++i) indices[i] = i;
  Rng rng(derive_seed(seed, 0x200));
  // Partial Fisher-Yates: the first n slots become a uniform sample.
  for (size_t i = 0; i < n; ++i) {
    std::swap(indices[i], indices[i + rng.uniform_index(test_size - i)]);
  }
  indices.resize(n);
  return indices;
}

namespace {

std::map<std::string, const ResponseRecord*> index_responses(
    std::span<const ResponseRecord> responses, std::span<const std::string> wanted) {
  std::map<std::string, const ResponseRecord*> by_id;
  for (const ResponseRecord& record : responses) by_id.emplace(record.id, &record);
  std::vector<std::string> missing;
  for (const std::string& id : wanted) {
    if (!by_id.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const std::string& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("no response for sample ids: " + list);
  }
  return by_id;
}

}  // namespace

ScoredResponses score_ner_responses(std::span<const GoldSentence> gold,
                                    std::span<const ResponseRecord> responses,
                                    std::string_view tag, std::string_view entity_type,
                                    const NerEvalOptions& options) {
  std::vector<std::string> ids;
  for (const GoldSentence& item : gold) ids.push_back(item.id);
  const auto by_id = index_responses(responses, ids);

  ScoredResponses scored;
  std::vector<std::vector<EntitySpan>> gold_spans;
  std::vector<std::vector<EntitySpan>> predicted_spans;
  for (const GoldSentence& item : gold) {
    std::vector<EntitySpan> spans;
    for (EntitySpan& span : decode_bio(item.sentence.labels)) {
      if (span.type == entity_type) spans.push_back(std::move(span));
    }
    gold_spans.push_back(std::move(spans));
    HighlightParse parsed = parse_highlights(item.sentence.tokens,
                                             by_id.at(item.id)->response, tag, entity_type);
    scored.diagnostics += parsed.diagnostics;
    predicted_spans.push_back(std::move(parsed.spans));
  }
  scored.report = evaluate_spans(gold_spans, predicted_spans, options);
  return scored;
}

std::string map_relation_response(std::string_view response,
                                  std::span<const std::string> labels) {
  const std::string haystack = lowercase(response);
  const std::string* best = nullptr;
  for (const std::string& label : labels) {
    if (label.empty() || haystack.find(lowercase(label)) == std::string::npos) continue;
    if (best == nullptr || label.size() > best->size()) best = &label;
  }
  return best == nullptr ? std::string(kAbstainLabel) : *best;
}

EvalReport score_re_responses(std::span<const GoldRelation> gold,
                              std::span<const ResponseRecord> responses,
                              std::span<const std::string> labels) {
  std::vector<std::string> ids;
  for (const GoldRelation& item : gold) ids.push_back(item.id);
  const auto by_id = index_responses(responses, ids);
  std::vector<std::string> gold_labels;
  std::vector<std::string> predicted;
  for (const GoldRelation& item : gold) {
    gold_labels.push_back(item.instance.label);
    predicted.push_back(map_relation_response(by_id.at(item.id)->response, labels));
  }
  return evaluate_relations(gold_labels, predicted);
}

}  // namespace fedner
