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

#ifndef FEDNER_CORPUS_H_
#define FEDNER_CORPUS_H_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "fedner/common.h"
#include "fedner/model.h"
#include "fedner/rng.h"

namespace fedner {

// Pre-tokenized sentence with one BIO tag per token.
struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;

  auto operator<=>(const TaggedSentence&) const = default;
};

// Sentence plus two inclusive entity spans and their relation label.
struct RelationInstance {
  std::vector<std::string> tokens;
  TokenSpan first;
  TokenSpan second;
  std::string label;

  auto operator<=>(const RelationInstance& other) const {
    return std::tie(tokens, first.start, first.end, second.start, second.end, label) <=>
           std::tie(other.tokens, other.first.start, other.first.end, other.second.start,
                    other.second.end, other.label);
  }
  bool operator==(const RelationInstance&) const = default;
};

// Throws ValidationError unless the sentence is non-empty, has matching
// token/label counts, whitespace-free tokens and well-formed BIO tags.
void validate_sentence(const TaggedSentence& sentence);
void validate_relation(const RelationInstance& instance);

// --- file formats ----------------------------------------------------------

// "token<SEP>tag" per line, SEP a tab or a single space; a blank line ends a
// sentence. Errors carry the 1-based line number.
std::vector<TaggedSentence> parse_conll(std::string_view text);
std::string serialize_conll(std::span<const TaggedSentence> sentences);

// One instance per line: space-joined tokens, "start:end", "start:end",
// label, separated by tabs.
std::vector<RelationInstance> parse_relations(std::string_view text);
std::string serialize_relations(std::span<const RelationInstance> instances);

// "token<SEP>gold<SEP>predicted" per line, blank line between sentences.
struct PredictedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> gold;
  std::vector<std::string> predicted;
};
std::vector<PredictedSentence> parse_predictions(std::string_view text);
std::string serialize_predictions(std::span<const PredictedSentence> sentences);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// --- preprocessing ---------------------------------------------------------

// Drops exact duplicates, keeping first occurrences in their original order.
template <typename T>
std::vector<T> dedup(std::vector<T> items) {
  std::set<T> seen;
  std::vector<T> kept;
  kept.reserve(items.size());
  for (T& item : items) {
    if (seen.insert(item).second) kept.push_back(std::move(item));
  }
  return kept;
}

// Cuts tokens and labels to at most max_tokens.
TaggedSentence truncate(TaggedSentence sentence, size_t max_tokens = 512);

struct SplitSizes {
  size_t train = 0;
  size_t dev = 0;
  size_t test = 0;
  bool operator==(const SplitSizes&) const = default;
};

// train = floor(0.8 N); the rest is halved with dev taking the odd item.
SplitSizes split_sizes(size_t item_count);

template <typename T>
struct CorpusSplit {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
  std::string source;
};

template <typename T>
CorpusSplit<T> split_80_10_10(std::vector<T> items, uint64_t seed, std::string source = {}) {
  require(items.size() >= 10, "an 80/10/10 split needs at least 10 items, got " +
                                  std::to_string(items.size()));
  const SplitSizes sizes = split_sizes(items.size());
  Rng rng(derive_seed(seed, 0x5b117));
  rng.shuffle(std::span<T>(items));
  CorpusSplit<T> split;
  split.source = std::move(source);
  auto first = std::make_move_iterator(items.begin());
  split.train.assign(first, first + sizes.train);
  split.dev.assign(first + sizes.train, first + sizes.train + sizes.dev);
  split.test.assign(first + sizes.train + sizes.dev, std::make_move_iterator(items.end()));
  return split;
}

enum class PartitionMode { kIidKFold, kBySource };

template <typename T>
struct Partition {
  std::vector<std::vector<T>> clients;
  PartitionMode mode = PartitionMode::kIidKFold;
  std::vector<std::string> names;  // source names for by-source partitions
};

// Shuffles, then deals items round-robin to K clients.
template <typename T>
Partition<T> partition_iid(std::vector<T> items, size_t client_count, uint64_t seed) {
  require(client_count >= 1, "partition needs at least one client");
  require(client_count <= items.size(),
          "cannot split " + std::to_string(items.size()) + " items into " +
              std::to_string(client_count) + " non-empty folds");
  Rng rng(derive_seed(seed, 0x9a27));
  rng.shuffle(std::span<T>(items));
  Partition<T> partition;
  partition.clients.resize(client_count);
  for (size_t i = 0; i < items.size(); ++i) {
    partition.clients[i % client_count].push_back(std::move(items[i]));
  }
  return partition;
}

// One client per named corpus, in input order. Sentences shared between
// corpora stay in both.
template <typename T>
Partition<T> partition_by_source(std::vector<std::pair<std::string, std::vector<T>>> corpora) {
  require(corpora.size() >= 2, "a by-source partition needs at least two corpora");
  Partition<T> partition;
  partition.mode = PartitionMode::kBySource;
  for (auto& [name, items] : corpora) {
    require(!items.empty(), "corpus '" + name + "' is empty");
    partition.names.push_back(name);
    partition.clients.push_back(std::move(items));
  }
  return partition;
}

// --- encoding --------------------------------------------------------------

// Token to id map built from training sentences only. Id 0 is the reserved
// unknown token; known words follow in lexicographic order. Words seen fewer
// than min_count times also map to the unknown id.
class Vocabulary {
 public:
  static constexpr int kUnknownId = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();
  template <typename Range>
  static Vocabulary build(const Range& sentences, size_t min_count = 1) {
    std::map<std::string, size_t> counts;
    for (const auto& sentence : sentences) {
      for (const std::string& token : sentence.tokens) ++counts[token];
    }
    std::vector<std::string> words;
    for (const auto& [word, count] : counts) {
      if (count >= min_count) words.push_back(word);
    }
    return Vocabulary(std::move(words));
  }
  explicit Vocabulary(std::vector<std::string> words);

  int id(std::string_view token) const;
  const std::string& word(int id) const { return words_.at(static_cast<size_t>(id)); }
  size_t size() const { return words_.size(); }
  // Words without the reserved unknown entry.
  std::span<const std::string> known_words() const {
    return std::span<const std::string>(words_).subspan(1);
  }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int, std::less<>> ids_;
};

// Ordered label names. BIO sets are "O" followed by B-/I- pairs per type in
// lexicographic type order, so label 0 is always "O".
class LabelSet {
 public:
  LabelSet() = default;
  static LabelSet bio(std::set<std::string> types);
  static LabelSet of_sentences(std::span<const TaggedSentence> sentences);
  static LabelSet relations(std::set<std::string> names);

  int id(std::string_view name) const;
  const std::string& name(int id) const { return names_.at(static_cast<size_t>(id)); }
  size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  // Entity types of a BIO set.
  const std::vector<std::string>& types() const { return types_; }

 private:
  explicit LabelSet(std::vector<std::string> names);

  std::vector<std::string> names_;
  std::vector<std::string> types_;
  std::map<std::string, int, std::less<>> ids_;
};

std::vector<int> encode_tokens(std::span<const std::string> tokens, const Vocabulary& vocabulary);
TaggedIds encode(const TaggedSentence& sentence, const Vocabulary& vocabulary,
                 const LabelSet& labels);
RelationIds encode(const RelationInstance& instance, const Vocabulary& vocabulary,
                   const LabelSet& labels);

template <typename T>
Dataset encode_all(std::span<const T> items, const Vocabulary& vocabulary,
                   const LabelSet& labels) {
  Dataset encoded;
  encoded.reserve(items.size());
  for (const T& item : items) encoded.emplace_back(encode(item, vocabulary, labels));
  return encoded;
}

std::vector<std::string> decode_labels(std::span<const int> ids, const LabelSet& labels);

}  // namespace fedner

#endif  // FEDNER_CORPUS_H_
