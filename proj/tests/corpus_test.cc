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

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedner/bio.h"
#include "fedner/common.h"
#include "fedner/corpus.h"
#include "fedner/eval.h"
#include "fedner/rng.h"
#include "fedner/synthetic.h"

namespace fedner {
namespace {

TaggedSentence sentence(std::vector<std::string> tokens, std::vector<std::string> labels) {
  return TaggedSentence{std::move(tokens), std::move(labels)};
}

std::vector<int> range(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
  return v;
}

template <typename T>
std::vector<T> sorted(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v;
}

TEST(Bio, Grammar) {
  EXPECT_EQ(parse_bio_tag("O"), (BioTag{BioPrefix::kOutside, ""}));
  EXPECT_EQ(parse_bio_tag("B-DIS"), (BioTag{BioPrefix::kBegin, "DIS"}));
  EXPECT_EQ(parse_bio_tag("I-Gene_x"), (BioTag{BioPrefix::kInside, "Gene_x"}));
  for (const char* bad : {"Q-DIS", "B-", "B", "o", "O-DIS", "", "BDIS"}) {
    EXPECT_FALSE(parse_bio_tag(bad).has_value()) << bad;
  }
  EXPECT_EQ(format_bio_tag(parse_bio_tag_or_throw("I-X")), "I-X");
  EXPECT_THROW(parse_bio_tag_or_throw("Q-DIS"), ValidationError);
}

TEST(ParseConll, Examples) {
  const auto parsed = parse_conll("the O\nflu B-DIS\n\n");
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0], sentence({"the", "flu"}, {"O", "B-DIS"}));
  EXPECT_TRUE(parse_conll("").empty());
  EXPECT_TRUE(parse_conll("\n\n").empty());
}

TEST(ParseConll, TabsCrlfAndMultipleSentences) {
  const auto parsed = parse_conll("a\tO\r\nb\tB-X\r\n\r\n\nc I-X\n");
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[1], sentence({"c"}, {"I-X"}));
}

TEST(ParseConll, ErrorsNameLineAndTag) {
  try {
    parse_conll("ok O\nx Q-DIS\n");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("Q-DIS"), std::string::npos) << what;
    EXPECT_NE(what.find("2"), std::string::npos) << what;
  }
  try {
    parse_conll("a O\n\nonlytoken\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_conll("a b O\n"), ValidationError);
}

TEST(ParseConll, RoundTripProperty) {
  Rng rng(51);
  const std::vector<std::string> tags = {"O", "B-A", "I-A", "B-Bb", "I-Bb"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TaggedSentence> sentences;
    for (size_t s = 0; s < 1 + rng.uniform_index(5); ++s) {
      TaggedSentence sent;
      for (size_t t = 0; t < 1 + rng.uniform_index(6); ++t) {
        sent.tokens.push_back("w" + std::to_string(rng.uniform_index(100)) + "-é");
        sent.labels.push_back(tags[rng.uniform_index(tags.size())]);
      }
      sentences.push_back(sent);
    }
    EXPECT_EQ(parse_conll(serialize_conll(sentences)), sentences);
  }
}

TEST(Relations, RoundTripAndErrors) {
  const std::vector<RelationInstance> items = {
      {{"aspirin", "treats", "pain"}, {0, 0}, {2, 2}, "treat"},
      {{"x", "y"}, {0, 1}, {1, 1}, "none"}};
  const std::string text = serialize_relations(items);
  EXPECT_EQ(text.substr(0, text.find('\n')), "aspirin treats pain\t0:0\t2:2\ttreat");
  EXPECT_EQ(parse_relations(text), items);
  EXPECT_THROW(parse_relations("a b\t0:0\t2:2\tx\n"), ValidationError);
  EXPECT_THROW(parse_relations("a b\t1:0\t0:0\tx\n"), ValidationError);
  EXPECT_THROW(parse_relations("a b\t0:0\n"), ValidationError);
}

TEST(Predictions, RoundTrip) {
  const std::vector<PredictedSentence> items = {{{"a", "b"}, {"B-X", "O"}, {"O", "B-X"}}};
  const auto back = parse_predictions(serialize_predictions(items));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].tokens, items[0].tokens);
  EXPECT_EQ(back[0].gold, items[0].gold);
  EXPECT_EQ(back[0].predicted, items[0].predicted);
  EXPECT_THROW(parse_predictions("a O\n"), ValidationError);
}

TEST(Files, MissingFileIsValidationError) {
  EXPECT_THROW(read_text_file("/nonexistent/fedner/data.txt"), ValidationError);
  const auto dir = std::filesystem::temp_directory_path() / "fedner_corpus_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text_file(dir / "f.txt", "hello\n");
  EXPECT_EQ(read_text_file(dir / "f.txt"), "hello\n");
  std::filesystem::remove_all(dir.parent_path());
}

TEST(Dedup, Examples) {
  const auto s = sentence({"a"}, {"O"});
  const auto t = sentence({"b"}, {"O"});
  EXPECT_EQ(dedup(std::vector{s, s, t}), (std::vector{s, t}));
  EXPECT_EQ(dedup(std::vector{t, s}), (std::vector{t, s}));
  const auto s2 = sentence({"a"}, {"B-X"});
  EXPECT_EQ(dedup(std::vector{s, s2}).size(), 2u);
}

TEST(Split, SizesFollowFloorRule) {
  EXPECT_EQ(split_sizes(12657), (SplitSizes{10125, 1266, 1266}));
  EXPECT_EQ(split_sizes(10), (SplitSizes{8, 1, 1}));
  EXPECT_EQ(split_sizes(13), (SplitSizes{10, 2, 1}));
  EXPECT_EQ(split_sizes(14), (SplitSizes{11, 2, 1}));
  for (size_t n = 10; n < 500; ++n) {
    const SplitSizes s = split_sizes(n);
    EXPECT_EQ(s.train, n * 8 / 10);
    EXPECT_EQ(s.train + s.dev + s.test, n);
    EXPECT_TRUE(s.dev == s.test || s.dev == s.test + 1);
  }
}

TEST(Split, DeterministicAndPreservesMultiset) {
  std::vector<int> items = range(57);
  items.push_back(3);  // a repeated value must survive as a multiset
  const auto a = split_80_10_10(items, 9, "src");
  const auto b = split_80_10_10(items, 9, "src");
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.dev, b.dev);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.source, "src");
  std::vector<int> all = a.train;
  all.insert(all.end(), a.dev.begin(), a.dev.end());
  all.insert(all.end(), a.test.begin(), a.test.end());
  EXPECT_EQ(sorted(all), sorted(items));
  EXPECT_NE(split_80_10_10(items, 10).train, a.train);
  EXPECT_THROW(split_80_10_10(range(9), 1), ValidationError);
}

TEST(PartitionIid, Sizes) {
  auto sizes = [](const Partition<int>& p) {
    std::vector<size_t> s;
    for (const auto& c : p.clients) s.push_back(c.size());
    return s;
  };
  EXPECT_EQ(sizes(partition_iid(range(10), 2, 1)), (std::vector<size_t>{5, 5}));
  EXPECT_EQ(sizes(partition_iid(range(10), 3, 1)), (std::vector<size_t>{4, 3, 3}));
  const auto one = partition_iid(range(10), 1, 1);
  EXPECT_EQ(sorted(one.clients[0]), range(10));
  EXPECT_THROW(partition_iid(range(3), 4, 1), ValidationError);
  EXPECT_THROW(partition_iid(range(3), 0, 1), ValidationError);
}

TEST(PartitionIid, PreservesMultisetProperty) {
  Rng rng(52);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.uniform_index(60);
    const size_t k = 1 + rng.uniform_index(n);
    std::vector<int> items;
    for (size_t i = 0; i < n; ++i) items.push_back(static_cast<int>(rng.uniform_index(20)));
    const auto p = partition_iid(items, k, rng.next());
    std::vector<int> all;
    size_t lo = n, hi = 0;
    for (const auto& c : p.clients) {
      all.insert(all.end(), c.begin(), c.end());
      lo = std::min(lo, c.size());
      hi = std::max(hi, c.size());
    }
    EXPECT_EQ(sorted(all), sorted(items));
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(PartitionBySource, Examples) {
  const auto p = partition_by_source<int>(
      {{"bc2gm", std::vector<int>(26006, 1)}, {"jnlpba", std::vector<int>(29559, 1)}});
  EXPECT_EQ(p.mode, PartitionMode::kBySource);
  ASSERT_EQ(p.clients.size(), 2u);
  EXPECT_EQ(p.clients[0].size(), 26006u);
  EXPECT_EQ(p.clients[1].size(), 29559u);
  EXPECT_EQ(p.names, (std::vector<std::string>{"bc2gm", "jnlpba"}));
  const auto three = partition_by_source<int>({{"a", {1, 2}}, {"b", {2, 3}}, {"c", {1}}});
  EXPECT_EQ(three.clients.size(), 3u);
  EXPECT_EQ(three.clients[1], (std::vector<int>{2, 3}));  // overlap kept
  EXPECT_THROW(partition_by_source<int>({{"a", {1}}}), ValidationError);
}

TEST(Truncate, Examples) {
  TaggedSentence long_one;
  for (int i = 0; i < 600; ++i) {
    long_one.tokens.push_back("t");
    long_one.labels.push_back(i == 511 ? "B-X" : (i == 512 ? "I-X" : "O"));
  }
  const auto cut = truncate(long_one);
  EXPECT_EQ(cut.tokens.size(), 512u);
  EXPECT_EQ(cut.labels.size(), 512u);
  EXPECT_EQ(cut.labels.back(), "B-X");
  long_one.tokens.resize(512);
  long_one.labels.resize(512);
  EXPECT_EQ(truncate(long_one), long_one);
  const auto short_one = sentence({"a", "b", "c"}, {"O", "O", "O"});
  EXPECT_EQ(truncate(short_one), short_one);
  EXPECT_EQ(truncate(short_one, 2).tokens.size(), 2u);
}

TEST(Vocabulary, UnknownAndOrdering) {
  const std::vector<TaggedSentence> train = {sentence({"b", "a", "b"}, {"O", "O", "O"}),
                                             sentence({"c"}, {"O"})};
  const Vocabulary v = Vocabulary::build(train);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.word(0), "<unk>");
  EXPECT_EQ(v.id("a"), 1);
  EXPECT_EQ(v.id("c"), 3);
  EXPECT_EQ(v.id("zzz"), Vocabulary::kUnknownId);
  const Vocabulary frequent = Vocabulary::build(train, 2);
  EXPECT_EQ(frequent.size(), 2u);
  EXPECT_EQ(frequent.id("a"), Vocabulary::kUnknownId);
  EXPECT_EQ(frequent.id("b"), 1);
}

TEST(LabelSet, BioOrderingAndEncoding) {
  const LabelSet labels = LabelSet::bio({"GENE", "DIS"});
  EXPECT_EQ(labels.names(), (std::vector<std::string>{"O", "B-DIS", "I-DIS", "B-GENE", "I-GENE"}));
  EXPECT_EQ(labels.types(), (std::vector<std::string>{"DIS", "GENE"}));
  EXPECT_THROW(labels.id("B-CHEM"), ValidationError);
  const std::vector<TaggedSentence> data = {sentence({"x", "y"}, {"B-GENE", "O"})};
  EXPECT_EQ(LabelSet::of_sentences(data).names(),
            (std::vector<std::string>{"O", "B-GENE", "I-GENE"}));
  const Vocabulary vocab = Vocabulary::build(data);
  const TaggedIds ids = encode(data[0], vocab, labels);
  EXPECT_EQ(ids.tokens, (std::vector<int>{1, 2}));
  EXPECT_EQ(ids.labels, (std::vector<int>{3, 0}));
  EXPECT_EQ(decode_labels(ids.labels, labels), data[0].labels);
}

TEST(Synthetic, SharedPoolWhenIid) {
  SyntheticProfile profile;
  profile.sentences = 50;
  profile.heterogeneity = 0.0;
  const auto sources = generate_synthetic(profile);
  ASSERT_EQ(sources.size(), 2u);
  EXPECT_EQ(sources[0].vocabulary, sources[1].vocabulary);
  EXPECT_EQ(sources[0].lexicon, sources[1].lexicon);
}

TEST(Synthetic, DisjointPoolsWhenNonIid) {
  SyntheticProfile profile;
  profile.sentences = 50;
  profile.heterogeneity = 1.0;
  profile.types = {"DIS", "GENE"};
  const auto sources = generate_synthetic(profile);
  for (const auto& [type, phrases] : sources[0].lexicon) {
    std::vector<std::string> common;
    std::set_intersection(phrases.begin(), phrases.end(), sources[1].lexicon.at(type).begin(),
                          sources[1].lexicon.at(type).end(), std::back_inserter(common));
    EXPECT_TRUE(common.empty()) << type;
  }
  std::vector<std::string> shared_words;
  std::set_intersection(sources[0].vocabulary.begin(), sources[0].vocabulary.end(),
                        sources[1].vocabulary.begin(), sources[1].vocabulary.end(),
                        std::back_inserter(shared_words));
  EXPECT_EQ(shared_words, std::vector<std::string>{"."});  // only the sentence terminator
}

TEST(Synthetic, DeterministicAndWellFormed) {
  SyntheticProfile profile;
  profile.sentences = 80;
  profile.sources = 3;
  profile.heterogeneity = 0.5;
  profile.types = {"A", "B"};
  const auto a = generate_synthetic(profile);
  const auto b = generate_synthetic(profile);
  for (size_t s = 0; s < a.size(); ++s) {
    EXPECT_EQ(a[s].sentences, b[s].sentences);
    EXPECT_EQ(a[s].name, "source" + std::to_string(s + 1));
    size_t entities = 0;
    for (const auto& sent : a[s].sentences) {
      EXPECT_NO_THROW(validate_sentence(sent));
      // No dangling I- tags: decoding without repair would change nothing.
      for (size_t t = 0; t < sent.labels.size(); ++t) {
        const BioTag tag = parse_bio_tag_or_throw(sent.labels[t]);
        if (tag.prefix != BioPrefix::kInside) continue;
        ASSERT_GT(t, 0u);
        const BioTag prev = parse_bio_tag_or_throw(sent.labels[t - 1]);
        EXPECT_NE(prev.prefix, BioPrefix::kOutside);
        EXPECT_EQ(prev.type, tag.type);
      }
      for (const auto& span : decode_bio(sent.labels)) {
        ++entities;
        std::string phrase;
        for (size_t t = span.start; t <= span.end; ++t) {
          phrase += (t > span.start ? " " : "") + sent.tokens[t];
        }
        EXPECT_TRUE(a[s].lexicon.at(span.type).contains(phrase)) << phrase;
      }
      for (const auto& token : sent.tokens) {
        if (token != ".") EXPECT_TRUE(a[s].vocabulary.contains(token)) << token;
      }
    }
    EXPECT_GT(entities, 0u);
  }
  profile.seed = 2;
  EXPECT_NE(generate_synthetic(profile)[0].sentences, a[0].sentences);
}

TEST(Synthetic, InvalidProfileRejected) {
  SyntheticProfile profile;
  profile.heterogeneity = 1.5;
  EXPECT_THROW(generate_synthetic(profile), ValidationError);
  profile = {};
  profile.sources = 0;
  EXPECT_THROW(generate_synthetic(profile), ValidationError);
  profile = {};
  profile.lexicon_size = 0;
  EXPECT_THROW(generate_synthetic(profile), ValidationError);
  profile = {};
  profile.types = {};
  EXPECT_THROW(generate_synthetic(profile), ValidationError);
}

TEST(Synthetic, RelationsAreValid) {
  const auto items = generate_synthetic_relations(60, 10, 3);
  ASSERT_EQ(items.size(), 60u);
  std::set<std::string> labels;
  for (const auto& item : items) {
    EXPECT_NO_THROW(validate_relation(item));
    labels.insert(item.label);
  }
  EXPECT_EQ(labels, (std::set<std::string>{"cause", "none", "treat"}));
  EXPECT_EQ(generate_synthetic_relations(60, 10, 3), items);
}

}  // namespace
}  // namespace fedner
