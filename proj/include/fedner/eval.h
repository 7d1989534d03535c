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

#ifndef FEDNER_EVAL_H_
#define FEDNER_EVAL_H_

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fedner {

// Typed entity over inclusive token positions [start, end].
struct EntitySpan {
  std::string type;
  size_t start = 0;
  size_t end = 0;

  bool overlaps(const EntitySpan& other) const {
    return start <= other.end && other.start <= end;
  }
  auto operator<=>(const EntitySpan&) const = default;
};

// Maximal runs B-X (I-X)* become spans. An I-X that does not continue an X
// span opens a new one. Output is sorted and non-overlapping.
std::vector<EntitySpan> decode_bio(std::span<const std::string> labels);

struct TypeCounts {
  size_t tp = 0;
  size_t fp = 0;
  size_t fn = 0;

  TypeCounts& operator+=(const TypeCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
  }
  bool operator==(const TypeCounts&) const = default;
};

// Per entity type. Every type occurring in gold or predictions has an entry.
using MatchCounts = std::map<std::string, TypeCounts>;

void accumulate(MatchCounts& into, const MatchCounts& counts);

// Exact (type, start, end) agreement, each gold span consumed at most once.
MatchCounts match_strict(std::span<const EntitySpan> gold, std::span<const EntitySpan> predicted);

// Predictions in order of start position each take the leftmost unconsumed
// overlapping gold span of the same type. With `type_free` any type matches;
// the true positive is then credited to the gold span's type.
MatchCounts match_lenient(std::span<const EntitySpan> gold, std::span<const EntitySpan> predicted,
                          bool type_free = false);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const Prf&) const = default;
};

// 0/0 ratios are 0.
Prf prf1(const TypeCounts& counts);

// Unweighted mean; rejects an empty list.
double macro_average(std::span<const double> f1s);

// Macro-F1 over the relation classes present in `gold`.
double eval_re(std::span<const std::string> gold, std::span<const std::string> predicted);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  bool operator==(const MeanStd&) const = default;
};

// Needs at least two runs.
MeanStd aggregate_repeats(std::span<const double> runs);

struct TypeScores {
  std::string type;
  TypeCounts strict_counts;
  TypeCounts lenient_counts;
  Prf strict;
  Prf lenient;
};

// Entity-level report. Macro averages run over the types present in the gold
// standard; they are 0 when gold holds no entities.
struct EvalReport {
  std::vector<TypeScores> types;
  double strict_macro = 0.0;
  double lenient_macro = 0.0;
};

struct NerEvalOptions {
  bool lenient_type_free = false;
};

EvalReport evaluate_spans(std::span<const std::vector<EntitySpan>> gold,
                          std::span<const std::vector<EntitySpan>> predicted,
                          const NerEvalOptions& options = {});
EvalReport evaluate_tags(std::span<const std::vector<std::string>> gold,
                         std::span<const std::vector<std::string>> predicted,
                         const NerEvalOptions& options = {});

// Relation report: one row per class, strict and lenient identical.
EvalReport evaluate_relations(std::span<const std::string> gold,
                              std::span<const std::string> predicted);

// type,lenient_precision,...,strict_f1 rows plus a final macro row.
std::string report_csv(const EvalReport& report);
// Aligned text table with a "lenient (strict)" macro line.
std::string report_table(const EvalReport& report);

// "0.900±0.100 (0.800±0.100)": lenient outside, strict inside parentheses.
std::string format_cell(const MeanStd& lenient, const MeanStd& strict);

}  // namespace fedner

#endif  // FEDNER_EVAL_H_
