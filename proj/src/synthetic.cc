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

#include "fedner/synthetic.h"

#include <utility>

#include "fedner/common.h"
#include "fedner/rng.h"

namespace fedner {
namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr size_t kFillersPerPool = 30;
constexpr size_t kTriggersPerType = 3;

// Issues pseudo-words that are unique across the whole corpus.
class WordMint {
 public:
  explicit WordMint(Rng& rng) : rng_(rng) {}

  std::string next(size_t min_syllables, size_t max_syllables) {
    while (true) {
      std::string word;
      const size_t syllables =
          min_syllables + rng_.uniform_index(max_syllables - min_syllables + 1);
      for (size_t s = 0; s < syllables; ++s) {
        word += kConsonants[rng_.uniform_index(kConsonants.size())];
        word += kVowels[rng_.uniform_index(kVowels.size())];
      }
      if (used_.insert(word).second) return word;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

struct Pool {
  std::vector<std::string> fillers;
  std::map<std::string, std::vector<std::string>> triggers;
  std::map<std::string, std::vector<std::vector<std::string>>> phrases;
};

Pool make_pool(const SyntheticProfile& profile, WordMint& mint, Rng& rng) {
  Pool pool;
  for (size_t i = 0; i < kFillersPerPool; ++i) pool.fillers.push_back(mint.next(1, 2));
  std::vector<std::string> entity_words;
  const size_t word_count = profile.lexicon_size * profile.types.size();
  for (size_t i = 0; i < word_count; ++i) entity_words.push_back(mint.next(2, 3));
  for (const std::string& type : profile.types) {
    for (size_t i = 0; i < kTriggersPerType; ++i) pool.triggers[type].push_back(mint.next(2, 2));
    std::set<std::vector<std::string>> seen;
    while (seen.size() < profile.lexicon_size) {
      std::vector<std::string> phrase(1 + rng.uniform_index(3));
      for (std::string& word : phrase) word = entity_words[rng.uniform_index(entity_words.size())];
      if (seen.insert(phrase).second) pool.phrases[type].push_back(std::move(phrase));
    }
  }
  return pool;
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.uniform_index(items.size())];
}

void add_fillers(TaggedSentence& sentence, const Pool& pool, size_t count, Rng& rng) {
  for (size_t i = 0; i < count; ++i) {
    sentence.tokens.push_back(pick(pool.fillers, rng));
    sentence.labels.emplace_back("O");
  }
}

void add_mention(TaggedSentence& sentence, const std::vector<std::string>& phrase,
                 const std::string& type) {
  for (size_t i = 0; i < phrase.size(); ++i) {
    sentence.tokens.push_back(phrase[i]);
    sentence.labels.push_back((i == 0 ? "B-" : "I-") + type);
  }
}

void record_pool(SyntheticSource& source, const Pool& pool) {
  source.vocabulary.insert(pool.fillers.begin(), pool.fillers.end());
  source.vocabulary.insert(".");
  for (const auto& [type, words] : pool.triggers) {
    source.vocabulary.insert(words.begin(), words.end());
  }
  for (const auto& [type, phrases] : pool.phrases) {
    for (const auto& phrase : phrases) {
      source.vocabulary.insert(phrase.begin(), phrase.end());
      std::string joined;
      for (const std::string& word : phrase) joined += (joined.empty() ? "" : " ") + word;
      source.lexicon[type].insert(std::move(joined));
    }
  }
}

}  // namespace

void SyntheticProfile::validate() const {
  require(!types.empty(), "synthetic profile needs at least one entity type");
  for (const std::string& type : types) {
    require(!type.empty() && type.find_first_of(" \t") == std::string::npos,
            "synthetic entity types must be non-empty words");
  }
  require(std::set<std::string>(types.begin(), types.end()).size() == types.size(),
          "synthetic entity types must be distinct");
  require(lexicon_size >= 1, "synthetic lexicon_size must be at least 1");
  require(sentences >= 1, "synthetic sentences must be at least 1");
  require(sources >= 1, "synthetic profile needs at least one source");
  require(heterogeneity >= 0.0 && heterogeneity <= 1.0,
          "synthetic heterogeneity must lie in [0, 1]");
}

std::vector<SyntheticSource> generate_synthetic(const SyntheticProfile& profile) {
  profile.validate();
  Rng rng(derive_seed(profile.seed, 0x5e7));
  WordMint mint(rng);
  const Pool shared = make_pool(profile, mint, rng);
  std::vector<Pool> own;
  for (size_t s = 0; s < profile.sources; ++s) own.push_back(make_pool(profile, mint, rng));

  std::vector<SyntheticSource> sources;
  for (size_t s = 0; s < profile.sources; ++s) {
    SyntheticSource source;
    source.name = "source" + std::to_string(s + 1);
    if (profile.heterogeneity < 1.0) record_pool(source, shared);
    if (profile.heterogeneity > 0.0) record_pool(source, own[s]);

    Rng sentence_rng(derive_seed(profile.seed, 0x5e8, s));
    auto choose_pool = [&]() -> const Pool& {
      return sentence_rng.uniform01() < profile.heterogeneity ? own[s] : shared;
    };
    for (size_t n = 0; n < profile.sentences; ++n) {
      TaggedSentence sentence;
      const Pool& frame = choose_pool();
      add_fillers(sentence, frame, 1 + sentence_rng.uniform_index(3), sentence_rng);
      const size_t mentions = sentence_rng.uniform_index(3);
      for (size_t m = 0; m < mentions; ++m) {
        const std::string& type = pick(profile.types, sentence_rng);
        sentence.tokens.push_back(pick(frame.triggers.at(type), sentence_rng));
        sentence.labels.emplace_back("O");
        add_mention(sentence, pick(choose_pool().phrases.at(type), sentence_rng), type);
        add_fillers(sentence, frame, 1 + sentence_rng.uniform_index(2), sentence_rng);
      }
      sentence.tokens.emplace_back(".");
      sentence.labels.emplace_back("O");
      source.sentences.push_back(std::move(sentence));
    }
    sources.push_back(std::move(source));
  }
  return sources;
}

std::vector<RelationInstance> generate_synthetic_relations(size_t count, size_t lexicon_size,
                                                           uint64_t seed) {
  require(count >= 1 && lexicon_size >= 1, "relation generator needs positive sizes");
  Rng rng(derive_seed(seed, 0x7e1));
  WordMint mint(rng);
  const std::vector<std::string> labels = {"cause", "none", "treat"};
  std::vector<std::string> fillers;
  for (size_t i = 0; i < kFillersPerPool; ++i) fillers.push_back(mint.next(1, 2));
  std::vector<std::string> mentions;
  for (size_t i = 0; i < lexicon_size; ++i) mentions.push_back(mint.next(2, 3));
  std::map<std::string, std::vector<std::string>> cues;
  for (const std::string& label : labels) {
    for (size_t i = 0; i < kTriggersPerType; ++i) cues[label].push_back(mint.next(2, 2));
  }

  std::vector<RelationInstance> instances;
  for (size_t n = 0; n < count; ++n) {
    RelationInstance instance;
    instance.label = pick(labels, rng);
    for (size_t i = 0, k = 1 + rng.uniform_index(3); i < k; ++i) {
      instance.tokens.push_back(pick(fillers, rng));
    }
    instance.first = TokenSpan{instance.tokens.size(), instance.tokens.size()};
    instance.tokens.push_back(pick(mentions, rng));
    instance.tokens.push_back(pick(fillers, rng));
    instance.tokens.push_back(pick(cues.at(instance.label), rng));
    instance.second = TokenSpan{instance.tokens.size(), instance.tokens.size()};
    instance.tokens.push_back(pick(mentions, rng));
    for (size_t i = 0, k = 1 + rng.uniform_index(3); i < k; ++i) {
      instance.tokens.push_back(pick(fillers, rng));
    }
    instance.tokens.emplace_back(".");
    instances.push_back(std::move(instance));
  }
  return instances;
}

}  // namespace fedner
