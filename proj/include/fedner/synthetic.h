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

#ifndef FEDNER_SYNTHETIC_H_
#define FEDNER_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedner/corpus.h"

namespace fedner {

// Template corpus with typed entity mentions, one corpus per source.
//
// Every source draws from a word pool shared by all sources and from a pool
// private to itself. Each pool owns filler words, per-type trigger words that
// precede mentions, and a per-type lexicon of 1-3 word phrases built from a
// common set of entity words, so the same word can occur in mentions of
// different types and context decides the type. `heterogeneity` is the
// probability that a sentence's template and each of its mentions come from
// the private pool: 0 gives identically distributed sources, 1 disjoint ones.
struct SyntheticProfile {
  std::vector<std::string> types = {"DIS"};
  size_t lexicon_size = 40;  // phrases per type per pool
  size_t sentences = 500;    // per source
  size_t sources = 2;
  double heterogeneity = 0.0;
  uint64_t seed = 1;

  void validate() const;
};

struct SyntheticSource {
  std::string name;
  std::vector<TaggedSentence> sentences;
  // Words this source can emit, i.e. the union of the pools it draws from.
  std::set<std::string> vocabulary;
  // Entity phrases (space-joined) per type available to this source.
  std::map<std::string, std::set<std::string>> lexicon;
};

std::vector<SyntheticSource> generate_synthetic(const SyntheticProfile& profile);

// Relation corpus: two mentions joined by a class-specific cue word. Labels
// are "cause", "none" and "treat".
std::vector<RelationInstance> generate_synthetic_relations(size_t count, size_t lexicon_size,
                                                           uint64_t seed);

}  // namespace fedner

#endif  // FEDNER_SYNTHETIC_H_
