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

#include "fedner/eval.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "fedner/bio.h"
#include "fedner/common.h"

namespace fedner {
namespace {

double ratio(size_t numerator, size_t denominator) {
  return denominator == 0 ? 0.0
                          : static_cast<double>(numerator) / static_cast<double>(denominator);
}

void add_counts(MatchCounts& counts, std::span<const EntitySpan> gold,
                std::span<const EntitySpan> predicted) {
  for (const EntitySpan& span : gold) counts[span.type];
  for (const EntitySpan& span : predicted) counts[span.type];
}

}  // namespace

std::vector<EntitySpan> decode_bio(std::span<const std::string> labels) {
  std::vector<EntitySpan> spans;
  bool open = false;
  for (size_t i = 0; i < labels.size(); ++i) {
    const BioTag tag = parse_bio_tag_or_throw(labels[i]);
    switch (tag.prefix) {
      case BioPrefix::kOutside:
        open = false;
        break;
      case BioPrefix::kBegin:
        spans.push_back(EntitySpan{tag.type, i, i});
        open = true;
        break;
      case BioPrefix::kInside:
        if (open && spans.back().type == tag.type) {
          spans.back().end = i;
        } else {
          spans.push_back(EntitySpan{tag.type, i, i});
          open = true;
        }
        break;
    }
  }
  return spans;
}

void accumulate(MatchCounts& into, const MatchCounts& counts) {
  for (const auto& [type, c] : counts) into[type] += c;
}

MatchCounts match_strict(std::span<const EntitySpan> gold,
                         std::span<const EntitySpan> predicted) {
  MatchCounts counts;
  add_counts(counts, gold, predicted);
  std::multiset<EntitySpan> unmatched(gold.begin(), gold.end());
  for (const EntitySpan& span : predicted) {
    auto it = unmatched.find(span);
    if (it != unmatched.end()) {
      unmatched.erase(it);
      ++counts[span.type].tp;
    } else {
      ++counts[span.type].fp;
    }
  }
  for (const EntitySpan& span : unmatched) ++counts[span.type].fn;
  return counts;
}

MatchCounts match_lenient(std::span<const EntitySpan> gold,
                          std::span<const EntitySpan> predicted, bool type_free) {
  MatchCounts counts;
  add_counts(counts, gold, predicted);

  std::vector<const EntitySpan*> gold_order;
  for (const EntitySpan& span : gold) gold_order.push_back(&span);
  std::vector<const EntitySpan*> pred_order;
  for (const EntitySpan& span : predicted) pred_order.push_back(&span);
  auto by_position = [](const EntitySpan* a, const EntitySpan* b) {
    return std::tie(a->start, a->end, a->type) < std::tie(b->start, b->end, b->type);
  };
  std::stable_sort(gold_order.begin(), gold_order.end(), by_position);
  std::stable_sort(pred_order.begin(), pred_order.end(), by_position);

  std::vector<bool> consumed(gold_order.size(), false);
  for (const EntitySpan* pred : pred_order) {
    bool matched = false;
    for (size_t g = 0; g < gold_order.size(); ++g) {
      const EntitySpan& candidate = *gold_order[g];
      if (consumed[g] || !pred->overlaps(candidate)) continue;
      if (!type_free && candidate.type != pred->type) continue;
      consumed[g] = true;
      ++counts[candidate.type].tp;
      matched = true;
      break;
    }
    if (!matched) ++counts[pred->type].fp;
  }
  for (size_t g = 0; g < gold_order.size(); ++g) {
    if (!consumed[g]) ++counts[gold_order[g]->type].fn;
  }
  return counts;
}

Prf prf1(const TypeCounts& counts) {
  Prf result;
  result.precision = ratio(counts.tp, counts.tp + counts.fp);
  result.recall = ratio(counts.tp, counts.tp + counts.fn);
  const double sum = result.precision + result.recall;
  result.f1 = sum == 0.0 ? 0.0 : 2.0 * result.precision * result.recall / sum;
  return result;
}

double macro_average(std::span<const double> f1s) {
  require(!f1s.empty(), "macro average over an empty set of types");
  return std::accumulate(f1s.begin(), f1s.end(), 0.0) / static_cast<double>(f1s.size());
}

double eval_re(std::span<const std::string> gold, std::span<const std::string> predicted) {
  require(!gold.empty(), "relation evaluation needs at least one instance");
  require(gold.size() == predicted.size(),
          "relation evaluation got " + std::to_string(gold.size()) + " gold labels and " +
              std::to_string(predicted.size()) + " predictions");
  std::map<std::string, TypeCounts> counts;
  for (const std::string& label : gold) counts[label];
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == predicted[i]) {
      ++counts[gold[i]].tp;
    } else {
      ++counts[gold[i]].fn;
      if (counts.contains(predicted[i])) ++counts[predicted[i]].fp;
    }
  }
  std::vector<double> f1s;
  for (const auto& [label, c] : counts) f1s.push_back(prf1(c).f1);
  return macro_average(f1s);
}

MeanStd aggregate_repeats(std::span<const double> runs) {
  require(runs.size() >= 2, "mean and standard deviation need at least two runs, got " +
                                std::to_string(runs.size()));
  MeanStd stats;
  stats.mean = std::accumulate(runs.begin(), runs.end(), 0.0) / static_cast<double>(runs.size());
  double squares = 0.0;
  for (double run : runs) squares += (run - stats.mean) * (run - stats.mean);
  stats.std = std::sqrt(squares / static_cast<double>(runs.size() - 1));
  return stats;
}

EvalReport evaluate_spans(std::span<const std::vector<EntitySpan>> gold,
                          std::span<const std::vector<EntitySpan>> predicted,
                          const NerEvalOptions& options) {
  require(gold.size() == predicted.size(),
          "evaluation got " + std::to_string(gold.size()) + " gold sentences and " +
              std::to_string(predicted.size()) + " predicted sentences");
  MatchCounts strict;
  MatchCounts lenient;
  std::set<std::string> gold_types;
  for (size_t i = 0; i < gold.size(); ++i) {
    accumulate(strict, match_strict(gold[i], predicted[i]));
    accumulate(lenient, match_lenient(gold[i], predicted[i], options.lenient_type_free));
    for (const EntitySpan& span : gold[i]) gold_types.insert(span.type);
  }

  EvalReport report;
  std::vector<double> strict_f1s;
  std::vector<double> lenient_f1s;
  for (const auto& [type, counts] : strict) {
    TypeScores row;
    row.type = type;
    row.strict_counts = counts;
    row.lenient_counts = lenient[type];
    row.strict = prf1(row.strict_counts);
    row.lenient = prf1(row.lenient_counts);
    if (gold_types.contains(type)) {
      strict_f1s.push_back(row.strict.f1);
      lenient_f1s.push_back(row.lenient.f1);
    }
    report.types.push_back(std::move(row));
  }
  if (!strict_f1s.empty()) {
    report.strict_macro = macro_average(strict_f1s);
    report.lenient_macro = macro_average(lenient_f1s);
  }
  return report;
}

EvalReport evaluate_tags(std::span<const std::vector<std::string>> gold,
                         std::span<const std::vector<std::string>> predicted,
                         const NerEvalOptions& options) {
  require(gold.size() == predicted.size(), "gold and predicted sentence counts differ");
  std::vector<std::vector<EntitySpan>> gold_spans;
  std::vector<std::vector<EntitySpan>> pred_spans;
  for (size_t i = 0; i < gold.size(); ++i) {
    require(gold[i].size() == predicted[i].size(),
            "sentence " + std::to_string(i) + " has different gold and predicted lengths");
    gold_spans.push_back(decode_bio(gold[i]));
    pred_spans.push_back(decode_bio(predicted[i]));
  }
  return evaluate_spans(gold_spans, pred_spans, options);
}

EvalReport evaluate_relations(std::span<const std::string> gold,
                              std::span<const std::string> predicted) {
  const double macro = eval_re(gold, predicted);
  std::map<std::string, TypeCounts> counts;
  for (const std::string& label : gold) counts[label];
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == predicted[i]) {
      ++counts[gold[i]].tp;
    } else {
      ++counts[gold[i]].fn;
      ++counts[predicted[i]].fp;
    }
  }
  EvalReport report;
  for (const auto& [label, c] : counts) {
    TypeScores row{label, c, c, prf1(c), prf1(c)};
    report.types.push_back(std::move(row));
  }
  report.strict_macro = macro;
  report.lenient_macro = macro;
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::string out =
      "type,lenient_precision,lenient_recall,lenient_f1,strict_precision,strict_recall,"
      "strict_f1\n";
  for (const TypeScores& row : report.types) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", row.type,
                       row.lenient.precision, row.lenient.recall, row.lenient.f1,
                       row.strict.precision, row.strict.recall, row.strict.f1);
  }
  out += fmt::format("macro,,,{:.6f},,,{:.6f}\n", report.lenient_macro, report.strict_macro);
  return out;
}

std::string report_table(const EvalReport& report) {
  size_t width = 5;
  for (const TypeScores& row : report.types) width = std::max(width, row.type.size());
  std::string out = fmt::format("{:<{}}  {:>8} {:>8} {:>8}  {:>8} {:>8} {:>8}\n", "type", width,
                                "len_P", "len_R", "len_F1", "strict_P", "strict_R", "strict_F1");
  for (const TypeScores& row : report.types) {
    out += fmt::format("{:<{}}  {:>8.3f} {:>8.3f} {:>8.3f}  {:>8.3f} {:>8.3f} {:>8.3f}\n",
                       row.type, width, row.lenient.precision, row.lenient.recall,
                       row.lenient.f1, row.strict.precision, row.strict.recall, row.strict.f1);
  }
  out += fmt::format("{:<{}}  {:.3f} ({:.3f})\n", "macro", width, report.lenient_macro,
                     report.strict_macro);
  return out;
}

std::string format_cell(const MeanStd& lenient, const MeanStd& strict) {
  return fmt::format("{:.3f}±{:.3f} ({:.3f}±{:.3f})", lenient.mean, lenient.std, strict.mean,
                     strict.std);
}

}  // namespace fedner
