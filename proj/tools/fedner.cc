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

// fedner command line: experiments, sweeps, reports and offline LLM scoring.

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "fedner/common.h"
#include "fedner/corpus.h"
#include "fedner/eval.h"
#include "fedner/experiment.h"
#include "fedner/llm_bridge.h"
#include "fedner/synthetic.h"

namespace {

namespace fs = std::filesystem;
using namespace fedner;

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<std::string> ids_for(size_t count, std::optional<size_t> subset, uint64_t seed,
                                 std::vector<size_t>* indices) {
  if (subset) {
    *indices = sample_test_subset(count, *subset, seed);
  } else {
    indices->resize(count);
    for (size_t i = 0; i < count; ++i) (*indices)[i] = i;
  }
  std::vector<std::string> ids;
  for (size_t i : *indices) ids.push_back(std::to_string(i));
  return ids;
}

std::string sentence_text(const std::vector<std::string>& tokens) {
  std::string text;
  for (size_t i = 0; i < tokens.size(); ++i) text += (i ? " " : "") + tokens[i];
  return text;
}

int run(int argc, char** argv) {
  CLI::App app{"Federated NER/RE simulation with FedAvg, FedProx and baselines"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  std::string output_override;
  auto* run_cmd = app.add_subcommand("run", "Train the configured scheme for every repeat");
  run_cmd->add_option("config", config_path, "experiment config file")->required();
  run_cmd->add_option("--output", output_override, "override [experiment] output");
  run_cmd->footer(config_reference());

  // sweep-clients
  std::vector<size_t> client_counts = {2, 5, 10};
  std::string sweep_out;
  auto* sweep_k = app.add_subcommand("sweep-clients", "Vary K over the same pooled data");
  sweep_k->add_option("config", config_path, "experiment config file")->required();
  sweep_k->add_option("--clients", client_counts, "K values, each >= 2")->delimiter(',');
  sweep_k->add_option("--out", sweep_out, "CSV path (default stdout)");

  // sweep-mu
  std::vector<double> mus;
  auto* sweep_mu = app.add_subcommand("sweep-mu", "Run fedprox over a mu grid");
  sweep_mu->add_option("config", config_path, "experiment config file")->required();
  sweep_mu->add_option("--mu", mus, "mu values (default 1,0.5,0.1,0.01,0.001)")->delimiter(',');
  sweep_mu->add_option("--out", sweep_out, "CSV path (default stdout)");

  // report
  std::vector<std::string> run_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Tabulate run directories");
  report->add_option("runs", run_dirs, "directories written by run")->required();
  report->add_option("--out", report_out, "output path (default stdout)");

  // bench
  std::string model_path, data_path;
  auto* bench = app.add_subcommand("bench", "Time single-instance inference");
  bench->add_option("--model", model_path, "model.json from a run")->required();
  bench->add_option("--data", data_path, "CoNLL or relation file")->required();

  // gen-synth
  SyntheticProfile profile;
  size_t relations = 0;
  std::string synth_dir;
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic corpus, one file per source");
  gen->add_option("--out", synth_dir, "output directory")->required();
  gen->add_option("--types", profile.types, "entity types")->delimiter(',');
  gen->add_option("--lexicon-size", profile.lexicon_size, "phrases per type per pool");
  gen->add_option("--sentences", profile.sentences, "sentences per source");
  gen->add_option("--sources", profile.sources, "number of sources");
  gen->add_option("--heterogeneity", profile.heterogeneity, "0 = IID, 1 = disjoint pools");
  gen->add_option("--seed", profile.seed, "generator seed");
  gen->add_option("--relations", relations, "also write this many RE instances per source");

  // prompts
  std::string input_path, tag, entity_type = "DIS", wording, prompts_out;
  std::optional<size_t> subset;
  uint64_t subset_seed = 1;
  bool one_shot = false;
  std::vector<std::string> relation_labels;
  std::string task_name = "ner";
  auto* prompts = app.add_subcommand("prompts", "Write zero-/one-shot prompts as JSONL");
  prompts->add_option("--input", input_path, "test corpus (CoNLL or relation file)")->required();
  prompts->add_option("--tag", tag, "HTML tag name used for highlights")->required();
  prompts->add_option("--task", task_name, "ner or re");
  prompts->add_option("--type", entity_type, "gold entity type (NER)");
  prompts->add_option("--wording", wording, "entity wording inside the prompt [lowercase type]");
  prompts->add_flag("--one-shot", one_shot, "include the ATP7B exemplar (NER)");
  prompts->add_option("--labels", relation_labels, "relation labels offered (RE)")->delimiter(',');
  prompts->add_option("--subset", subset, "sample this many items");
  prompts->add_option("--subset-seed", subset_seed, "sampling seed");
  prompts->add_option("--out", prompts_out, "JSONL path (default stdout)");

  // score-llm
  std::string responses_path, score_csv;
  NerEvalOptions score_options;
  auto* score = app.add_subcommand("score-llm", "Score recorded LLM responses");
  score->add_option("--gold", input_path, "test corpus the prompts came from")->required();
  score->add_option("--responses", responses_path, "JSONL records {id, response}")->required();
  score->add_option("--tag", tag, "HTML tag name (NER)");
  score->add_option("--task", task_name, "ner or re");
  score->add_option("--type", entity_type, "entity type the highlights denote (NER)");
  score->add_option("--labels", relation_labels, "relation labels (RE)")->delimiter(',');
  score->add_option("--subset", subset, "same sampling as prompts");
  score->add_option("--subset-seed", subset_seed, "sampling seed");
  score->add_flag("--lenient-type-free", score_options.lenient_type_free,
                  "lenient matching ignores type (non-default)");
  score->add_option("--csv", score_csv, "also write the report CSV here");

  // eval
  std::string predictions_path, eval_csv;
  NerEvalOptions eval_options;
  auto* eval = app.add_subcommand("eval", "Score a token/gold/predicted file");
  eval->add_option("predictions", predictions_path, "three-column prediction file")->required();
  eval->add_flag("--lenient-type-free", eval_options.lenient_type_free,
                 "lenient matching ignores type (non-default)");
  eval->add_option("--csv", eval_csv, "also write the report CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*run_cmd) {
    ExperimentConfig config = load_experiment_config(config_path);
    if (!output_override.empty()) config.output = output_override;
    const RunManifest manifest = cmd_run(config, std::cerr);
    std::cout << fmt::format("wrote {} repeats to {} (config {})\n", manifest.repeats.size(),
                             config.output, manifest.config_hash.substr(0, 12));
  } else if (*sweep_k) {
    const ExperimentConfig config = load_experiment_config(config_path);
    emit(sweep_csv("clients", cmd_sweep_clients(config, client_counts, std::cerr)), sweep_out);
  } else if (*sweep_mu) {
    const ExperimentConfig config = load_experiment_config(config_path);
    emit(sweep_csv("mu", cmd_sweep_mu(config, mus, std::cerr)), sweep_out);
  } else if (*report) {
    std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
    emit(cmd_report(dirs), report_out);
  } else if (*bench) {
    const SavedModel model = parse_model(read_text_file(model_path));
    const BenchResult result = cmd_bench(model, load_for_model(model, data_path));
    std::cout << fmt::format(
        "instances {}\ntotal_seconds {:.6f}\nseconds_per_instance {:.9f}\ninstances_per_second "
        "{:.1f}\n",
        result.instances, result.total_seconds, result.seconds_per_instance,
        result.instances_per_second);
  } else if (*gen) {
    for (const SyntheticSource& source : generate_synthetic(profile)) {
      write_text_file(fs::path(synth_dir) / (source.name + ".conll"),
                      serialize_conll(source.sentences));
    }
    for (size_t s = 0; relations > 0 && s < profile.sources; ++s) {
      write_text_file(fs::path(synth_dir) / fmt::format("source{}.rel", s + 1),
                      serialize_relations(generate_synthetic_relations(
                          relations, profile.lexicon_size, derive_seed(profile.seed, s))));
    }
  } else if (*prompts) {
    const Task task = parse_task(task_name);
    PromptSpec spec;
    spec.task = task == Task::kNer ? PromptTask::kNer : PromptTask::kRe;
    spec.tag = tag;
    spec.shot = one_shot ? Shot::kOne : Shot::kZero;
    if (one_shot) spec.exemplar = atp7b_exemplar(tag);
    if (!wording.empty()) {
      spec.entity_type = wording;
    } else {
      spec.entity_type.clear();
      for (char c : entity_type) spec.entity_type += static_cast<char>(std::tolower(c));
    }
    spec.relation_labels = relation_labels;
    std::vector<PromptRecord> records;
    std::vector<size_t> indices;
    const std::string text = read_text_file(input_path);
    if (task == Task::kNer) {
      const auto sentences = parse_conll(text);
      const auto ids = ids_for(sentences.size(), subset, subset_seed, &indices);
      for (size_t i = 0; i < indices.size(); ++i) {
        records.push_back({ids[i], build_prompt(spec, sentence_text(sentences[indices[i]].tokens))});
      }
    } else {
      const auto instances = parse_relations(text);
      const auto ids = ids_for(instances.size(), subset, subset_seed, &indices);
      for (size_t i = 0; i < indices.size(); ++i) {
        records.push_back(
            {ids[i], build_prompt(spec, highlight_relation_arguments(instances[indices[i]], tag))});
      }
    }
    emit(serialize_prompt_records(records), prompts_out);
  } else if (*score) {
    const Task task = parse_task(task_name);
    const std::string text = read_text_file(input_path);
    const auto responses = parse_response_records(read_text_file(responses_path));
    std::vector<size_t> indices;
    EvalReport result;
    if (task == Task::kNer) {
      require(!tag.empty(), "score-llm --task ner needs --tag");
      const auto sentences = parse_conll(text);
      const auto ids = ids_for(sentences.size(), subset, subset_seed, &indices);
      std::vector<GoldSentence> gold;
      for (size_t i = 0; i < indices.size(); ++i) gold.push_back({ids[i], sentences[indices[i]]});
      const ScoredResponses scored =
          score_ner_responses(gold, responses, tag, entity_type, score_options);
      result = scored.report;
      const HighlightDiagnostics& d = scored.diagnostics;
      std::cerr << fmt::format(
          "highlights: {} regions, {} dropped, {} partial, {} nested, {} unclosed, {} stray\n",
          d.regions, d.dropped, d.partial, d.nested_opens, d.unclosed, d.stray_closes);
    } else {
      const auto instances = parse_relations(text);
      const auto ids = ids_for(instances.size(), subset, subset_seed, &indices);
      std::vector<GoldRelation> gold;
      std::set<std::string> names;
      for (size_t i = 0; i < indices.size(); ++i) {
        gold.push_back({ids[i], instances[indices[i]]});
        names.insert(instances[indices[i]].label);
      }
      if (relation_labels.empty()) relation_labels.assign(names.begin(), names.end());
      result = score_re_responses(gold, responses, relation_labels);
    }
    std::cout << report_table(result);
    if (!score_csv.empty()) write_text_file(score_csv, report_csv(result));
  } else if (*eval) {
    std::vector<std::vector<std::string>> gold, predicted;
    for (auto& sentence : parse_predictions(read_text_file(predictions_path))) {
      gold.push_back(std::move(sentence.gold));
      predicted.push_back(std::move(sentence.predicted));
    }
    const EvalReport result = evaluate_tags(gold, predicted, eval_options);
    std::cout << report_table(result);
    if (!eval_csv.empty()) write_text_file(eval_csv, report_csv(result));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fedner::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
