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

#include "fedner/corpus.h"

#include <fstream>
#include <sstream>

#include "fedner/bio.h"

namespace fedner {
namespace {

// Splits on every tab or space; empty fields are preserved so that doubled
// separators are reported as malformed.
std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t begin = 0;
  for (size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == '\t' || line[i] == ' ') {
      fields.push_back(line.substr(begin, i - begin));
      begin = i + 1;
    }
  }
  return fields;
}

std::vector<std::string_view> split_on(std::string_view text, char separator) {
  std::vector<std::string_view> parts;
  size_t begin = 0;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == separator) {
      parts.push_back(text.substr(begin, i - begin));
      begin = i + 1;
    }
  }
  return parts;
}

// Calls fn(line_number, line) for every line, without the newline and a
// trailing carriage return.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  size_t line_number = 0;
  size_t begin = 0;
  while (begin < text.size()) {
    size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_number, line);
    begin = end + 1;
  }
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

std::string at_line(size_t line_number) { return "line " + std::to_string(line_number) + ": "; }

// Reads a CoNLL-like column file into sentences of `columns` fields.
std::vector<std::vector<std::vector<std::string>>> parse_columns(std::string_view text,
                                                                 size_t columns) {
  std::vector<std::vector<std::vector<std::string>>> sentences;
  std::vector<std::vector<std::string>> current(columns);
  auto flush = [&] {
    if (!current.front().empty()) sentences.push_back(std::move(current));
    current.assign(columns, {});
  };
  for_each_line(text, [&](size_t line_number, std::string_view line) {
    if (is_blank(line)) {
      flush();
      return;
    }
    const auto fields = split_fields(line);
    if (fields.size() != columns) {
      throw ValidationError(at_line(line_number) + "expected " + std::to_string(columns) +
                            " fields separated by a tab or a single space, got '" +
                            std::string(line) + "'");
    }
    for (size_t c = 0; c < columns; ++c) {
      if (fields[c].empty()) {
        throw ValidationError(at_line(line_number) + "empty field in '" + std::string(line) +
                              "'");
      }
      if (c > 0 && !parse_bio_tag(fields[c])) {
        throw ValidationError(at_line(line_number) + "invalid BIO tag '" +
                              std::string(fields[c]) + "'");
      }
      current[c].emplace_back(fields[c]);
    }
  });
  flush();
  return sentences;
}

TokenSpan parse_span(std::string_view field, size_t line_number) {
  const auto parts = split_on(field, ':');
  auto parse_index = [&](std::string_view text) {
    size_t value = 0;
    require(!text.empty() && text.find_first_not_of("0123456789") == std::string_view::npos,
            at_line(line_number) + "malformed span '" + std::string(field) + "'");
    for (char c : text) value = value * 10 + static_cast<size_t>(c - '0');
    return value;
  };
  require(parts.size() == 2, at_line(line_number) + "malformed span '" + std::string(field) +
                                 "', expected start:end");
  return TokenSpan{parse_index(parts[0]), parse_index(parts[1])};
}

}  // namespace

void validate_sentence(const TaggedSentence& sentence) {
  require(!sentence.tokens.empty(), "sentence has no tokens");
  require(sentence.tokens.size() == sentence.labels.size(),
          "sentence has " + std::to_string(sentence.tokens.size()) + " tokens but " +
              std::to_string(sentence.labels.size()) + " labels");
  for (const std::string& token : sentence.tokens) {
    require(!token.empty() && token.find_first_of(" \t\r\n") == std::string::npos,
            "token '" + token + "' is empty or contains whitespace");
  }
  for (const std::string& label : sentence.labels) parse_bio_tag_or_throw(label);
}

void validate_relation(const RelationInstance& instance) {
  require(!instance.tokens.empty(), "relation instance has no tokens");
  for (const TokenSpan& span : {instance.first, instance.second}) {
    require(span.start <= span.end && span.end < instance.tokens.size(),
            "relation span " + std::to_string(span.start) + ":" + std::to_string(span.end) +
                " outside a sentence of " + std::to_string(instance.tokens.size()) + " tokens");
  }
  require(!instance.label.empty(), "relation instance has an empty label");
}

std::vector<TaggedSentence> parse_conll(std::string_view text) {
  std::vector<TaggedSentence> sentences;
  for (auto& columns : parse_columns(text, 2)) {
    sentences.push_back(TaggedSentence{std::move(columns[0]), std::move(columns[1])});
  }
  return sentences;
}

std::string serialize_conll(std::span<const TaggedSentence> sentences) {
  std::string out;
  for (const TaggedSentence& sentence : sentences) {
    validate_sentence(sentence);
    for (size_t i = 0; i < sentence.tokens.size(); ++i) {
      out += sentence.tokens[i];
      out += '\t';
      out += sentence.labels[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<RelationInstance> parse_relations(std::string_view text) {
  std::vector<RelationInstance> instances;
  for_each_line(text, [&](size_t line_number, std::string_view line) {
    if (is_blank(line)) return;
    const auto fields = split_on(line, '\t');
    require(fields.size() == 4, at_line(line_number) +
                                    "expected tokens, span1, span2 and label separated by tabs");
    RelationInstance instance;
    for (std::string_view token : split_on(fields[0], ' ')) {
      require(!token.empty(), at_line(line_number) + "empty token in '" +
                                  std::string(fields[0]) + "'");
      instance.tokens.emplace_back(token);
    }
    instance.first = parse_span(fields[1], line_number);
    instance.second = parse_span(fields[2], line_number);
    instance.label = std::string(fields[3]);
    try {
      validate_relation(instance);
    } catch (const ValidationError& e) {
      throw ValidationError(at_line(line_number) + e.what());
    }
    instances.push_back(std::move(instance));
  });
  return instances;
}

std::string serialize_relations(std::span<const RelationInstance> instances) {
  std::string out;
  for (const RelationInstance& instance : instances) {
    validate_relation(instance);
    for (size_t i = 0; i < instance.tokens.size(); ++i) {
      if (i > 0) out += ' ';
      out += instance.tokens[i];
    }
    out += '\t' + std::to_string(instance.first.start) + ':' +
           std::to_string(instance.first.end) + '\t' + std::to_string(instance.second.start) +
           ':' + std::to_string(instance.second.end) + '\t' + instance.label + '\n';
  }
  return out;
}

std::vector<PredictedSentence> parse_predictions(std::string_view text) {
  std::vector<PredictedSentence> sentences;
  for (auto& columns : parse_columns(text, 3)) {
    sentences.push_back(PredictedSentence{std::move(columns[0]), std::move(columns[1]),
                                          std::move(columns[2])});
  }
  return sentences;
}

std::string serialize_predictions(std::span<const PredictedSentence> sentences) {
  std::string out;
  for (const PredictedSentence& sentence : sentences) {
    for (size_t i = 0; i < sentence.tokens.size(); ++i) {
      out += sentence.tokens[i] + '\t' + sentence.gold[i] + '\t' + sentence.predicted[i] + '\n';
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TaggedSentence truncate(TaggedSentence sentence, size_t max_tokens) {
  require(max_tokens >= 1, "max_tokens must be at least 1");
  if (sentence.tokens.size() > max_tokens) sentence.tokens.resize(max_tokens);
  if (sentence.labels.size() > max_tokens) sentence.labels.resize(max_tokens);
  return sentence;
}

SplitSizes split_sizes(size_t item_count) {
  SplitSizes sizes;
  sizes.train = item_count * 4 / 5;
  const size_t rest = item_count - sizes.train;
  sizes.test = rest / 2;
  sizes.dev = rest - sizes.test;
  return sizes;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  words_.reserve(words.size() + 1);
  words_.emplace_back(kUnknownToken);
  ids_.emplace(std::string(kUnknownToken), kUnknownId);
  for (std::string& word : words) {
    if (ids_.contains(word)) continue;
    ids_.emplace(word, static_cast<int>(words_.size()));
    words_.push_back(std::move(word));
  }
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnknownId : it->second;
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (size_t i = 0; i < names_.size(); ++i) {
    require(ids_.emplace(names_[i], static_cast<int>(i)).second,
            "duplicate label '" + names_[i] + "'");
  }
}

LabelSet LabelSet::bio(std::set<std::string> types) {
  std::vector<std::string> names = {"O"};
  for (const std::string& type : types) {
    require(!type.empty(), "entity type must be non-empty");
    names.push_back("B-" + type);
    names.push_back("I-" + type);
  }
  LabelSet set(std::move(names));
  set.types_.assign(types.begin(), types.end());
  return set;
}

LabelSet LabelSet::of_sentences(std::span<const TaggedSentence> sentences) {
  std::set<std::string> types;
  for (const TaggedSentence& sentence : sentences) {
    for (const std::string& label : sentence.labels) {
      BioTag tag = parse_bio_tag_or_throw(label);
      if (tag.prefix != BioPrefix::kOutside) types.insert(std::move(tag.type));
    }
  }
  return bio(std::move(types));
}

LabelSet LabelSet::relations(std::set<std::string> names) {
  require(!names.empty(), "relation label set is empty");
  return LabelSet(std::vector<std::string>(names.begin(), names.end()));
}

int LabelSet::id(std::string_view name) const {
  auto it = ids_.find(name);
  require(it != ids_.end(), "label '" + std::string(name) + "' is not in the label set");
  return it->second;
}

std::vector<int> encode_tokens(std::span<const std::string> tokens,
                               const Vocabulary& vocabulary) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& token : tokens) ids.push_back(vocabulary.id(token));
  return ids;
}

TaggedIds encode(const TaggedSentence& sentence, const Vocabulary& vocabulary,
                 const LabelSet& labels) {
  validate_sentence(sentence);
  TaggedIds encoded;
  encoded.tokens = encode_tokens(sentence.tokens, vocabulary);
  for (const std::string& label : sentence.labels) encoded.labels.push_back(labels.id(label));
  return encoded;
}

RelationIds encode(const RelationInstance& instance, const Vocabulary& vocabulary,
                   const LabelSet& labels) {
  validate_relation(instance);
  return RelationIds{encode_tokens(instance.tokens, vocabulary), instance.first, instance.second,
                     labels.id(instance.label)};
}

std::vector<std::string> decode_labels(std::span<const int> ids, const LabelSet& labels) {
  std::vector<std::string> names;
  names.reserve(ids.size());
  for (int id : ids) names.push_back(labels.name(id));
  return names;
}

}  // namespace fedner
