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

#ifndef FEDNER_EXPERIMENT_H_
#define FEDNER_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedner/corpus.h"
#include "fedner/eval.h"
#include "fedner/federation.h"
#include "fedner/model.h"
#include "fedner/synthetic.h"

namespace fedner {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Task { kNer, kRe };
enum class Scheme { kCentralized, kSingle, kFedAvg, kFedProx };

std::string_view to_string(Task task);
std::string_view to_string(Scheme scheme);
Task parse_task(std::string_view name);
Scheme parse_scheme(std::string_view name);

struct DataConfig {
  std::string source = "synthetic";  // synthetic | files
  // One corpus per file, each deduplicated and split 80/10/10 on its own.
  std::vector<std::string> files;
  // Alternatively a corpus that is already split.
  std::string train;
  std::string dev;
  std::string test;
  PartitionMode partition = PartitionMode::kIidKFold;
  size_t max_tokens = 512;
  bool dedup = true;
  size_t min_count = 1;
  size_t relations = 600;  // synthetic RE instances per source
};

struct ExperimentConfig {
  Task task = Task::kNer;
  Scheme scheme = Scheme::kFedAvg;
  size_t repeats = 3;
  uint64_t seed = 1;
  std::string output = "runs/experiment";
  DataConfig data;
  SyntheticProfile synthetic;
  ModelKind model_kind = ModelKind::kRnnCrfTagger;
  size_t embed_dim = 16;
  size_t hidden_dim = 16;
  size_t window_radius = 1;
  size_t clients = 2;
  size_t rounds = 10;
  size_t local_epochs = 1;
  size_t batch_size = 16;
  double mu = 0.0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double warmup = 0.0;
  size_t workers = 1;
  NerEvalOptions eval;

  // Throws ValidationError naming the offending field.
  void validate() const;
  // Typed fields in a fixed order; output and workers are excluded because
  // they cannot change results.
  std::string canonical() const;
  std::string hash() const;  // SHA-256 hex of canonical()
};

// Flat INI sections; see `fedner run --help` for the keys. Unknown sections or
// keys are rejected.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string config_reference();

// Encoded data ready for training: one dataset per client plus pooled dev
// and test sets, with the vocabulary built from client training data only.
struct PreparedData {
  Vocabulary vocabulary;
  LabelSet labels;
  std::vector<Dataset> clients;
  std::vector<std::string> client_names;
  Dataset dev;
  Dataset test;
  size_t train_size() const;
  Dataset pooled_train() const;
};

// Loads or generates the corpora, deduplicates, truncates, splits each
// corpus 80/10/10 and partitions the training portion across
// `config.clients` clients (or one per source). Split and partition use
// config.seed and do not change across repeats.
PreparedData prepare_data(const ExperimentConfig& config);

ModelSpec model_spec(const ExperimentConfig& config, const PreparedData& data);
FederationConfig federation_config(const ExperimentConfig& config, const PreparedData& data,
                                   uint64_t seed);

EvalReport evaluate_model(Task task, const ModelSpec& spec, const ParamVector& weights,
                          const Dataset& data, const LabelSet& labels,
                          const NerEvalOptions& options = {});
DevScorer make_dev_scorer(Task task, const ModelSpec& spec, const Dataset& dev,
                          const LabelSet& labels, const NerEvalOptions& options);

// Per-type scores averaged over reports; macros are the mean of macros.
EvalReport average_reports(std::span<const EvalReport> reports);

struct SchemeRun {
  ModelSpec spec;
  std::vector<RunResult> runs;        // one, or one per client for single
  std::vector<EvalReport> reports;    // test report per run
  EvalReport report;                  // average_reports(reports)
};

// Trains the configured scheme with training seed `seed` and scores the
// dev-selected weights on the test set.
SchemeRun run_scheme(const ExperimentConfig& config, const PreparedData& data, uint64_t seed);

// --- commands ----------------------------------------------------------------

struct RepeatRecord {
  uint64_t seed = 0;
  std::string report;   // relative path of the repeat's report CSV
  std::string metrics;  // relative path of the per-round JSONL log
  double strict_macro = 0.0;
  double lenient_macro = 0.0;
  double wall_seconds = 0.0;
};

struct RunManifest {
  std::string version;
  std::string config_hash;
  Task task = Task::kNer;
  Scheme scheme = Scheme::kFedAvg;
  double mu = 0.0;
  std::vector<RepeatRecord> repeats;
  std::string summary;  // relative path of summary.csv
};

// Writes repeat_<i>/{report.csv,metrics.jsonl,model.json}, summary.csv and
// manifest.json under config.output. Repeat i trains with seed + i.
RunManifest cmd_run(const ExperimentConfig& config, std::ostream& log);

struct SweepRow {
  std::string label;        // K or mu
  size_t train_total = 0;   // client training items summed
  std::vector<double> lenient;
  std::vector<double> strict;
  std::string error;
};

// Mean/std cell, or "n/a" text when fewer than two values exist.
std::string sweep_csv(std::string_view key, std::span<const SweepRow> rows);

// IID partitions of the same pooled training data for every K. Rows that
// cannot be built carry the error text instead of metrics.
std::vector<SweepRow> cmd_sweep_clients(const ExperimentConfig& config,
                                        std::span<const size_t> client_counts, std::ostream& log);

inline const std::vector<double> kDefaultMuGrid = {1.0, 0.5, 0.1, 0.01, 0.001};

// One fedprox run set per mu. Duplicates are dropped with a warning on
// `log`; mu = 0 is labeled fedavg-equivalent.
std::vector<SweepRow> cmd_sweep_mu(const ExperimentConfig& config, std::vector<double> mus,
                                   std::ostream& log);

// Table of "lenient (strict)" mean±std cells, one row per run directory,
// grouped by scheme. Missing repeat files are listed under the table and
// their rows show gaps. Throws if a summary disagrees with its repeats.
std::string cmd_report(std::span<const std::filesystem::path> run_dirs);

// Macro strict/lenient F1 read back from a report CSV.
struct MacroRow {
  double lenient_f1 = 0.0;
  double strict_f1 = 0.0;
};
MacroRow parse_report_macro(std::string_view csv);

// Serialized trained model: spec, vocabulary, labels and weights.
struct SavedModel {
  Task task = Task::kNer;
  ModelSpec spec;
  Vocabulary vocabulary;
  LabelSet labels;
  ParamVector weights;
};
std::string serialize_model(const SavedModel& model);
SavedModel parse_model(std::string_view json);

struct BenchResult {
  size_t instances = 0;
  double total_seconds = 0.0;
  double seconds_per_instance = 0.0;
  double instances_per_second = 0.0;
};
// One warmup pass, then a timed single-instance prediction loop.
BenchResult cmd_bench(const SavedModel& model, const Dataset& data);

// Encodes a corpus file (CoNLL for NER, relation TSV for RE) with the
// model's vocabulary and labels.
Dataset load_for_model(const SavedModel& model, const std::filesystem::path& path);

}  // namespace fedner

#endif  // FEDNER_EXPERIMENT_H_
