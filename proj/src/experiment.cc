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

#include "fedner/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "fedner/common.h"
#include "fedner/rng.h"
#include "json.hpp"

namespace fedner {
namespace {

namespace fs = std::filesystem;
using boost::property_tree::ptree;
using Json = nlohmann::ordered_json;

// --- config parsing ----------------------------------------------------------

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"task", "scheme", "repeats", "seed", "output"}},
      {"data", {"source", "files", "train", "dev", "test", "partition", "max_tokens", "dedup",
                "min_count", "relations"}},
      {"synthetic", {"types", "lexicon_size", "sentences", "sources", "heterogeneity", "seed"}},
      {"model", {"kind", "embed_dim", "hidden_dim", "window_radius"}},
      {"federation", {"clients", "rounds", "local_epochs", "batch_size", "mu", "optimizer", "lr",
                      "warmup", "workers"}},
      {"eval", {"lenient_type_free"}},
  };
  return keys;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  size_t begin = 0;
  while (begin <= text.size()) {
    const size_t comma = std::min(text.find(',', begin), text.size());
    std::string item = trim(text.substr(begin, comma - begin));
    if (!item.empty()) items.push_back(std::move(item));
    begin = comma + 1;
  }
  return items;
}

// CSV fields, keeping empty ones.
std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  size_t begin = 0;
  while (true) {
    const size_t comma = line.find(',', begin);
    fields.push_back(trim(line.substr(begin, comma == std::string_view::npos ? comma : comma - begin)));
    if (comma == std::string_view::npos) return fields;
    begin = comma + 1;
  }
}

class ConfigReader {
 public:
  explicit ConfigReader(const ptree& root) : root_(root) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto child = root_.get_child_optional(ptree::path_type(section, '/'));
    if (!child) return std::nullopt;
    const auto value = child->get_optional<std::string>(ptree::path_type(key, '/'));
    if (!value) return std::nullopt;
    return trim(*value);
  }

  template <typename T, typename Parse>
  void read(const std::string& section, const std::string& key, T& out, Parse parse) const {
    const auto value = raw(section, key);
    if (!value) return;
    try {
      out = parse(*value);
    } catch (const std::exception& e) {
      throw ValidationError("invalid value for [" + section + "] " + key + ": '" + *value +
                            "' (" + e.what() + ")");
    }
  }

 private:
  const ptree& root_;
};

size_t parse_count(const std::string& text) {
  require(!text.empty() && text.find_first_not_of("0123456789") == std::string::npos,
          "expected a non-negative integer");
  return static_cast<size_t>(std::stoull(text));
}

uint64_t parse_u64(const std::string& text) { return parse_count(text); }

double parse_real(const std::string& text) {
  size_t used = 0;
  const double value = std::stod(text, &used);
  require(used == text.size() && std::isfinite(value), "expected a finite number");
  return value;
}

bool parse_flag(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("expected true or false");
}

PartitionMode parse_partition(const std::string& text) {
  if (text == "iid") return PartitionMode::kIidKFold;
  if (text == "by_source") return PartitionMode::kBySource;
  throw ValidationError("expected iid or by_source");
}

std::string_view to_string(PartitionMode mode) {
  return mode == PartitionMode::kIidKFold ? "iid" : "by_source";
}

std::string real(double value) { return fmt::format("{:.17g}", value); }

std::string sha256_hex(std::string_view text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  require(EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) == 1,
          "SHA-256 failed");
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string join(std::span<const std::string> items, std::string_view separator) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += separator;
    out += items[i];
  }
  return out;
}

// --- data preparation ----------------------------------------------------------

template <typename T>
struct Corpora {
  std::vector<std::pair<std::string, std::vector<T>>> train;
  std::vector<T> dev;
  std::vector<T> test;
};

std::vector<TaggedSentence> parse_items(std::string_view text, const TaggedSentence*) {
  return parse_conll(text);
}
std::vector<RelationInstance> parse_items(std::string_view text, const RelationInstance*) {
  return parse_relations(text);
}

template <typename T>
std::vector<T> read_items(const std::string& path) {
  return parse_items(read_text_file(path), static_cast<const T*>(nullptr));
}

TaggedSentence fit_length(TaggedSentence sentence, size_t max_tokens) {
  return truncate(std::move(sentence), max_tokens);
}

// Relations keep their arguments: cut the tail only when both spans fit.
std::optional<RelationInstance> fit_length(RelationInstance instance, size_t max_tokens) {
  if (instance.tokens.size() <= max_tokens) return instance;
  if (std::max(instance.first.end, instance.second.end) >= max_tokens) return std::nullopt;
  instance.tokens.resize(max_tokens);
  return instance;
}

template <typename T>
std::vector<T> preprocess(std::vector<T> items, const DataConfig& data) {
  if (data.dedup) items = dedup(std::move(items));
  std::vector<T> kept;
  kept.reserve(items.size());
  for (T& item : items) {
    if constexpr (std::is_same_v<T, TaggedSentence>) {
      kept.push_back(fit_length(std::move(item), data.max_tokens));
    } else {
      if (auto fitted = fit_length(std::move(item), data.max_tokens)) {
        kept.push_back(std::move(*fitted));
      }
    }
  }
  return kept;
}

template <typename T>
Corpora<T> split_corpora(std::vector<std::pair<std::string, std::vector<T>>> sources,
                         const ExperimentConfig& config) {
  Corpora<T> corpora;
  for (size_t s = 0; s < sources.size(); ++s) {
    auto& [name, items] = sources[s];
    CorpusSplit<T> split =
        split_80_10_10(preprocess(std::move(items), config.data), derive_seed(config.seed, s), name);
    corpora.train.emplace_back(name, std::move(split.train));
    corpora.dev.insert(corpora.dev.end(), split.dev.begin(), split.dev.end());
    corpora.test.insert(corpora.test.end(), split.test.begin(), split.test.end());
  }
  return corpora;
}

template <typename T>
Corpora<T> load_file_corpora(const ExperimentConfig& config) {
  const DataConfig& data = config.data;
  if (!data.files.empty()) {
    std::vector<std::pair<std::string, std::vector<T>>> sources;
    for (const std::string& file : data.files) {
      sources.emplace_back(fs::path(file).stem().string(), read_items<T>(file));
    }
    return split_corpora(std::move(sources), config);
  }
  Corpora<T> corpora;
  corpora.train.emplace_back("train", preprocess(read_items<T>(data.train), data));
  corpora.dev = preprocess(read_items<T>(data.dev), data);
  corpora.test = preprocess(read_items<T>(data.test), data);
  return corpora;
}

Corpora<TaggedSentence> ner_corpora(const ExperimentConfig& config) {
  if (config.data.source == "files") return load_file_corpora<TaggedSentence>(config);
  std::vector<std::pair<std::string, std::vector<TaggedSentence>>> sources;
  for (SyntheticSource& source : generate_synthetic(config.synthetic)) {
    sources.emplace_back(source.name, std::move(source.sentences));
  }
  return split_corpora(std::move(sources), config);
}

Corpora<RelationInstance> re_corpora(const ExperimentConfig& config) {
  if (config.data.source == "files") return load_file_corpora<RelationInstance>(config);
  std::vector<std::pair<std::string, std::vector<RelationInstance>>> sources;
  for (size_t s = 0; s < config.synthetic.sources; ++s) {
    sources.emplace_back("source" + std::to_string(s + 1),
                         generate_synthetic_relations(config.data.relations,
                                                      config.synthetic.lexicon_size,
                                                      derive_seed(config.synthetic.seed, s)));
  }
  return split_corpora(std::move(sources), config);
}

LabelSet label_set(const Corpora<TaggedSentence>& corpora) {
  std::vector<TaggedSentence> all(corpora.dev.begin(), corpora.dev.end());
  all.insert(all.end(), corpora.test.begin(), corpora.test.end());
  for (const auto& [name, items] : corpora.train) all.insert(all.end(), items.begin(), items.end());
  return LabelSet::of_sentences(all);
}

LabelSet label_set(const Corpora<RelationInstance>& corpora) {
  std::set<std::string> names;
  for (const auto& item : corpora.dev) names.insert(item.label);
  for (const auto& item : corpora.test) names.insert(item.label);
  for (const auto& [name, items] : corpora.train) {
    for (const auto& item : items) names.insert(item.label);
  }
  return LabelSet::relations(std::move(names));
}

template <typename T>
PreparedData encode_corpora(Corpora<T> corpora, const ExperimentConfig& config) {
  require(!corpora.dev.empty(), "the dev set is empty");
  require(!corpora.test.empty(), "the test set is empty");
  Partition<T> partition;
  if (config.data.partition == PartitionMode::kBySource) {
    require(corpora.train.size() == config.clients,
            "[federation] clients = " + std::to_string(config.clients) +
                " but the by_source partition has " + std::to_string(corpora.train.size()) +
                " sources");
    partition = partition_by_source(std::move(corpora.train));
  } else {
    std::vector<T> pooled;
    for (auto& [name, items] : corpora.train) {
      pooled.insert(pooled.end(), std::make_move_iterator(items.begin()),
                    std::make_move_iterator(items.end()));
    }
    partition = partition_iid(std::move(pooled), config.clients, config.seed);
    for (size_t k = 0; k < config.clients; ++k) {
      partition.names.push_back("client" + std::to_string(k + 1));
    }
  }

  PreparedData data;
  std::vector<T> train;
  for (const auto& client : partition.clients) train.insert(train.end(), client.begin(), client.end());
  data.vocabulary = Vocabulary::build(train, config.data.min_count);
  data.labels = label_set(Corpora<T>{{{"", train}}, corpora.dev, corpora.test});
  for (const auto& client : partition.clients) {
    data.clients.push_back(encode_all<T>(client, data.vocabulary, data.labels));
  }
  data.client_names = partition.names;
  data.dev = encode_all<T>(corpora.dev, data.vocabulary, data.labels);
  data.test = encode_all<T>(corpora.test, data.vocabulary, data.labels);
  return data;
}

// --- reporting helpers -------------------------------------------------------

std::string cell_or_gap(std::span<const double> lenient, std::span<const double> strict) {
  if (lenient.size() < 2) return "n/a";
  return format_cell(aggregate_repeats(lenient), aggregate_repeats(strict));
}

std::string std_text(std::span<const double> values) {
  return values.size() < 2 ? "n/a" : fmt::format("{:.6f}", aggregate_repeats(values).std);
}

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

void write_logs(std::ostream& out, const SchemeRun& run) {
  for (size_t k = 0; k < run.runs.size(); ++k) {
    for (const RoundRecord& record : run.runs[k].history) {
      Json line;
      if (run.runs.size() > 1) line["client"] = k;
      line["round"] = record.round;
      line["client_loss"] = record.client_loss;
      line["dev_strict"] = record.dev.strict;
      line["dev_lenient"] = record.dev.lenient;
      out << line.dump() << '\n';
    }
  }
}

std::string summary_csv(std::span<const EvalReport> reports) {
  std::vector<double> lenient, strict;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_type;
  for (const EvalReport& report : reports) {
    lenient.push_back(report.lenient_macro);
    strict.push_back(report.strict_macro);
    for (const TypeScores& type : report.types) {
      per_type[type.type].first.push_back(type.lenient.f1);
      per_type[type.type].second.push_back(type.strict.f1);
    }
  }
  std::string out = "metric,mean,std,repeats\n";
  auto row = [&](const std::string& name, std::span<const double> values) {
    out += fmt::format("{},{:.6f},{},{}\n", name, mean_of(values), std_text(values), values.size());
  };
  row("lenient_macro", lenient);
  row("strict_macro", strict);
  for (const auto& [type, values] : per_type) {
    row(type + "/lenient_f1", values.first);
    row(type + "/strict_f1", values.second);
  }
  return out;
}

Json manifest_json(const RunManifest& manifest) {
  Json json;
  json["version"] = manifest.version;
  json["config_hash"] = manifest.config_hash;
  json["task"] = to_string(manifest.task);
  json["scheme"] = to_string(manifest.scheme);
  json["mu"] = manifest.mu;
  json["summary"] = manifest.summary;
  json["repeats"] = Json::array();
  for (const RepeatRecord& repeat : manifest.repeats) {
    json["repeats"].push_back({{"seed", repeat.seed},
                               {"report", repeat.report},
                               {"metrics", repeat.metrics},
                               {"strict_macro", repeat.strict_macro},
                               {"lenient_macro", repeat.lenient_macro},
                               {"wall_seconds", repeat.wall_seconds}});
  }
  return json;
}

RunManifest parse_manifest(std::string_view text) {
  RunManifest manifest;
  try {
    const Json json = Json::parse(text);
    manifest.version = json.at("version").get<std::string>();
    manifest.config_hash = json.at("config_hash").get<std::string>();
    manifest.task = parse_task(json.at("task").get<std::string>());
    manifest.scheme = parse_scheme(json.at("scheme").get<std::string>());
    manifest.mu = json.at("mu").get<double>();
    manifest.summary = json.at("summary").get<std::string>();
    for (const Json& repeat : json.at("repeats")) {
      RepeatRecord record;
      record.seed = repeat.at("seed").get<uint64_t>();
      record.report = repeat.at("report").get<std::string>();
      record.metrics = repeat.at("metrics").get<std::string>();
      manifest.repeats.push_back(record);
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return manifest;
}

// mean and std columns of summary.csv for one metric name.
std::optional<std::pair<double, std::string>> summary_entry(std::string_view csv,
                                                            std::string_view metric) {
  std::istringstream in{std::string(csv)};
  std::string line;
  while (std::getline(in, line)) {
    const auto fields = split_fields(line);
    if (fields.size() == 4 && fields[0] == metric) return std::make_pair(std::stod(fields[1]), fields[2]);
  }
  return std::nullopt;
}

SweepRow run_sweep_point(const ExperimentConfig& config, const PreparedData& data,
                         std::string label) {
  SweepRow row;
  row.label = std::move(label);
  row.train_total = data.train_size();
  for (size_t i = 0; i < config.repeats; ++i) {
    const SchemeRun run = run_scheme(config, data, config.seed + i);
    row.lenient.push_back(run.report.lenient_macro);
    row.strict.push_back(run.report.strict_macro);
  }
  return row;
}

}  // namespace

// --- enums ---------------------------------------------------------------------

std::string_view to_string(Task task) { return task == Task::kNer ? "ner" : "re"; }

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kCentralized: return "centralized";
    case Scheme::kSingle: return "single";
    case Scheme::kFedAvg: return "fedavg";
    case Scheme::kFedProx: return "fedprox";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  if (name == "ner") return Task::kNer;
  if (name == "re") return Task::kRe;
  throw ValidationError("unknown task '" + std::string(name) + "' (expected ner or re)");
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme scheme : {Scheme::kCentralized, Scheme::kSingle, Scheme::kFedAvg, Scheme::kFedProx}) {
    if (name == to_string(scheme)) return scheme;
  }
  throw ValidationError("unknown scheme '" + std::string(name) +
                        "' (expected centralized, single, fedavg or fedprox)");
}

// --- config --------------------------------------------------------------------

void ExperimentConfig::validate() const {
  require(repeats >= 1, "[experiment] repeats must be at least 1");
  require(!output.empty(), "[experiment] output must be set");
  if (scheme == Scheme::kFedProx) require(mu > 0.0, "[federation] mu must be > 0 for fedprox");
  if (scheme != Scheme::kFedProx) {
    require(mu == 0.0, "[federation] mu must be 0 unless the scheme is fedprox");
  }
  require(data.source == "synthetic" || data.source == "files",
          "[data] source must be synthetic or files");
  if (data.source == "files") {
    const bool presplit = !data.train.empty() || !data.dev.empty() || !data.test.empty();
    require(data.files.empty() != !presplit,
            "[data] set either files or all of train, dev and test");
    if (presplit) {
      require(!data.train.empty() && !data.dev.empty() && !data.test.empty(),
              "[data] train, dev and test must all be set");
      require(data.partition == PartitionMode::kIidKFold,
              "[data] by_source partition needs one corpus per file in files");
    }
  } else {
    synthetic.validate();
  }
  require(data.max_tokens >= 1, "[data] max_tokens must be at least 1");
  require(data.min_count >= 1, "[data] min_count must be at least 1");
  require(data.relations >= 10, "[data] relations must be at least 10");
  require(embed_dim >= 1, "[model] embed_dim must be at least 1");
  require(hidden_dim >= 1, "[model] hidden_dim must be at least 1");
  require(task == Task::kRe || model_kind != ModelKind::kRelationClassifier,
          "[model] kind relation_classifier needs task re");
  require(task == Task::kNer || model_kind == ModelKind::kRelationClassifier,
          "[model] task re needs kind relation_classifier");
  require(clients >= 1, "[federation] clients must be at least 1");
  require(rounds >= 1, "[federation] rounds must be at least 1");
  require(local_epochs >= 1, "[federation] local_epochs must be at least 1");
  require(batch_size >= 1, "[federation] batch_size must be at least 1");
  require(mu >= 0.0, "[federation] mu must be non-negative");
  require(learning_rate > 0.0, "[federation] lr must be positive");
  require(warmup >= 0.0 && warmup < 1.0, "[federation] warmup must lie in [0, 1)");
  require(workers >= 1, "[federation] workers must be at least 1");
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{}={}\n", key, value);
  };
  line("experiment.task", std::string(to_string(task)));
  line("experiment.scheme", std::string(to_string(scheme)));
  line("experiment.repeats", std::to_string(repeats));
  line("experiment.seed", std::to_string(seed));
  line("data.source", data.source);
  line("data.files", join(data.files, ","));
  line("data.train", data.train);
  line("data.dev", data.dev);
  line("data.test", data.test);
  line("data.partition", std::string(to_string(data.partition)));
  line("data.max_tokens", std::to_string(data.max_tokens));
  line("data.dedup", data.dedup ? "true" : "false");
  line("data.min_count", std::to_string(data.min_count));
  if (data.source == "synthetic") {
    line("data.relations", std::to_string(data.relations));
    line("synthetic.types", join(synthetic.types, ","));
    line("synthetic.lexicon_size", std::to_string(synthetic.lexicon_size));
    line("synthetic.sentences", std::to_string(synthetic.sentences));
    line("synthetic.sources", std::to_string(synthetic.sources));
    line("synthetic.heterogeneity", real(synthetic.heterogeneity));
    line("synthetic.seed", std::to_string(synthetic.seed));
  }
  line("model.kind", std::string(to_string(model_kind)));
  line("model.embed_dim", std::to_string(embed_dim));
  line("model.hidden_dim", std::to_string(hidden_dim));
  line("model.window_radius", std::to_string(window_radius));
  line("federation.clients", std::to_string(clients));
  line("federation.rounds", std::to_string(rounds));
  line("federation.local_epochs", std::to_string(local_epochs));
  line("federation.batch_size", std::to_string(batch_size));
  line("federation.mu", real(mu));
  line("federation.optimizer", std::string(to_string(optimizer)));
  line("federation.lr", real(learning_rate));
  line("federation.warmup", real(warmup));
  line("eval.lenient_type_free", eval.lenient_type_free ? "true" : "false");
  return out;
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical()); }

ExperimentConfig parse_experiment_config(std::string_view text) {
  ptree root;
  try {
    std::istringstream in{std::string(text)};
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  for (const auto& [section, keys] : root) {
    const auto known = known_keys().find(section);
    require(known != known_keys().end(), "config: unknown section [" + section + "]");
    for (const auto& [key, value] : keys) {
      require(known->second.contains(key), "config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  const ConfigReader reader(root);
  ExperimentConfig c;
  auto text_value = [](const std::string& v) { return v; };
  reader.read("experiment", "task", c.task, [](const std::string& v) { return parse_task(v); });
  reader.read("experiment", "scheme", c.scheme, [](const std::string& v) { return parse_scheme(v); });
  reader.read("experiment", "repeats", c.repeats, parse_count);
  reader.read("experiment", "seed", c.seed, parse_u64);
  reader.read("experiment", "output", c.output, text_value);

  reader.read("data", "source", c.data.source, text_value);
  reader.read("data", "files", c.data.files, [](const std::string& v) { return split_list(v); });
  reader.read("data", "train", c.data.train, text_value);
  reader.read("data", "dev", c.data.dev, text_value);
  reader.read("data", "test", c.data.test, text_value);
  reader.read("data", "partition", c.data.partition, parse_partition);
  reader.read("data", "max_tokens", c.data.max_tokens, parse_count);
  reader.read("data", "dedup", c.data.dedup, parse_flag);
  reader.read("data", "min_count", c.data.min_count, parse_count);
  reader.read("data", "relations", c.data.relations, parse_count);

  reader.read("synthetic", "types", c.synthetic.types,
              [](const std::string& v) { return split_list(v); });
  reader.read("synthetic", "lexicon_size", c.synthetic.lexicon_size, parse_count);
  reader.read("synthetic", "sentences", c.synthetic.sentences, parse_count);
  reader.read("synthetic", "sources", c.synthetic.sources, parse_count);
  reader.read("synthetic", "heterogeneity", c.synthetic.heterogeneity, parse_real);
  reader.read("synthetic", "seed", c.synthetic.seed, parse_u64);

  if (c.task == Task::kRe) c.model_kind = ModelKind::kRelationClassifier;
  reader.read("model", "kind", c.model_kind,
              [](const std::string& v) { return parse_model_kind(v); });
  reader.read("model", "embed_dim", c.embed_dim, parse_count);
  reader.read("model", "hidden_dim", c.hidden_dim, parse_count);
  reader.read("model", "window_radius", c.window_radius, parse_count);

  reader.read("federation", "clients", c.clients, parse_count);
  reader.read("federation", "rounds", c.rounds, parse_count);
  reader.read("federation", "local_epochs", c.local_epochs, parse_count);
  reader.read("federation", "batch_size", c.batch_size, parse_count);
  reader.read("federation", "mu", c.mu, parse_real);
  reader.read("federation", "optimizer", c.optimizer,
              [](const std::string& v) { return parse_optimizer_kind(v); });
  reader.read("federation", "lr", c.learning_rate, parse_real);
  reader.read("federation", "warmup", c.warmup, parse_real);
  reader.read("federation", "workers", c.workers, parse_count);

  reader.read("eval", "lenient_type_free", c.eval.lenient_type_free, parse_flag);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_text_file(path));
}

std::string config_reference() {
  return R"(Config file: INI sections of key = value pairs. Defaults in brackets.

[experiment]
  task            ner | re [ner]
  scheme          centralized | single | fedavg | fedprox [fedavg]
  repeats         runs with seeds seed, seed+1, ... [3]
  seed            base seed; also fixes the split and partition [1]
  output          output directory [runs/experiment]
[data]
  source          synthetic | files [synthetic]
  files           comma list, one corpus per file, each split 80/10/10
  train, dev, test  an already split corpus (instead of files)
  partition       iid | by_source (one client per file or source) [iid]
  max_tokens      truncation length [512]
  dedup           drop exact duplicates before splitting [true]
  min_count       rarer training words map to <unk> [1]
  relations       synthetic RE instances per source [600]
[synthetic]
  types           comma list of entity types [DIS]
  lexicon_size    phrases per type per pool [40]
  sentences       per source [500]
  sources         [2]
  heterogeneity   0 = identically distributed, 1 = disjoint pools [0]
  seed            generator seed [1]
[model]
  kind            window_tagger | rnn_crf_tagger | relation_classifier [rnn_crf_tagger]
  embed_dim       [16]
  hidden_dim      [16]
  window_radius   window_tagger context on each side [1]
[federation]
  clients         K, ignored by by_source which uses one per source [2]
  rounds          T [10]
  local_epochs    R [1]
  batch_size      B [16]
  mu              proximal weight; > 0 for fedprox, 0 otherwise [0]
  optimizer       sgd | adam [adam]
  lr              base learning rate [0.001]
  warmup          warmup fraction of each worker's steps [0]
  workers         client threads; results do not depend on it [1]
[eval]
  lenient_type_free  lenient matching ignores entity type (non-default) [false]
)";
}

// --- data ------------------------------------------------------------------------

size_t PreparedData::train_size() const {
  size_t total = 0;
  for (const Dataset& client : clients) total += client.size();
  return total;
}

Dataset PreparedData::pooled_train() const {
  Dataset pooled;
  pooled.reserve(train_size());
  for (const Dataset& client : clients) pooled.insert(pooled.end(), client.begin(), client.end());
  return pooled;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  if (config.task == Task::kNer) return encode_corpora(ner_corpora(config), config);
  return encode_corpora(re_corpora(config), config);
}

ModelSpec model_spec(const ExperimentConfig& config, const PreparedData& data) {
  ModelSpec spec;
  spec.kind = config.model_kind;
  spec.vocab_size = data.vocabulary.size();
  spec.label_count = data.labels.size();
  spec.embed_dim = config.embed_dim;
  spec.hidden_dim = config.hidden_dim;
  spec.window_radius = config.window_radius;
  spec.validate();
  return spec;
}

FederationConfig federation_config(const ExperimentConfig& config, const PreparedData& data,
                                   uint64_t seed) {
  FederationConfig fc;
  fc.model = model_spec(config, data);
  fc.clients = data.clients.size();
  fc.rounds = config.rounds;
  fc.local_epochs = config.local_epochs;
  fc.batch_size = config.batch_size;
  fc.algorithm = config.scheme == Scheme::kFedProx ? Algorithm::kFedProx : Algorithm::kFedAvg;
  fc.mu = config.scheme == Scheme::kFedProx ? config.mu : 0.0;
  fc.optimizer = config.optimizer;
  fc.learning_rate = config.learning_rate;
  fc.warmup_fraction = config.warmup;
  fc.seed = seed;
  fc.workers = config.workers;
  return fc;
}

EvalReport evaluate_model(Task task, const ModelSpec& spec, const ParamVector& weights,
                          const Dataset& data, const LabelSet& labels,
                          const NerEvalOptions& options) {
  if (task == Task::kNer) {
    std::vector<std::vector<std::string>> gold, predicted;
    gold.reserve(data.size());
    predicted.reserve(data.size());
    for (const Example& example : data) {
      const auto* sentence = std::get_if<TaggedIds>(&example);
      require(sentence != nullptr, "NER evaluation got a relation instance");
      gold.push_back(decode_labels(sentence->labels, labels));
      predicted.push_back(decode_labels(predict_tags(spec, weights, sentence->tokens), labels));
    }
    return evaluate_tags(gold, predicted, options);
  }
  std::vector<std::string> gold, predicted;
  for (const Example& example : data) {
    const auto* instance = std::get_if<RelationIds>(&example);
    require(instance != nullptr, "RE evaluation got a tagged sentence");
    gold.push_back(labels.name(instance->label));
    predicted.push_back(labels.name(predict_relation(spec, weights, *instance)));
  }
  return evaluate_relations(gold, predicted);
}

DevScorer make_dev_scorer(Task task, const ModelSpec& spec, const Dataset& dev,
                          const LabelSet& labels, const NerEvalOptions& options) {
  return [task, spec, &dev, &labels, options](const ParamVector& weights) {
    const EvalReport report = evaluate_model(task, spec, weights, dev, labels, options);
    return DevScore{report.strict_macro, report.lenient_macro};
  };
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  require(!reports.empty(), "cannot average an empty report list");
  if (reports.size() == 1) return reports.front();
  std::map<std::string, TypeScores> types;
  for (const EvalReport& report : reports) {
    for (const TypeScores& t : report.types) types[t.type].type = t.type;
  }
  const double n = static_cast<double>(reports.size());
  EvalReport average;
  for (auto& [name, scores] : types) {
    for (const EvalReport& report : reports) {
      for (const TypeScores& t : report.types) {
        if (t.type != name) continue;
        scores.strict_counts += t.strict_counts;
        scores.lenient_counts += t.lenient_counts;
        for (auto [into, from] : {std::pair{&scores.strict, &t.strict},
                                  std::pair{&scores.lenient, &t.lenient}}) {
          into->precision += from->precision / n;
          into->recall += from->recall / n;
          into->f1 += from->f1 / n;
        }
      }
    }
    average.types.push_back(scores);
  }
  for (const EvalReport& report : reports) {
    average.strict_macro += report.strict_macro / n;
    average.lenient_macro += report.lenient_macro / n;
  }
  return average;
}

SchemeRun run_scheme(const ExperimentConfig& config, const PreparedData& data, uint64_t seed) {
  SchemeRun run;
  const FederationConfig fc = federation_config(config, data, seed);
  run.spec = fc.model;
  const DevScorer scorer = make_dev_scorer(config.task, run.spec, data.dev, data.labels, config.eval);
  switch (config.scheme) {
    case Scheme::kCentralized:
      run.runs.push_back(run_centralized(fc, data.pooled_train(), scorer));
      break;
    case Scheme::kSingle:
      run.runs = run_single_client(fc, data.clients, scorer);
      break;
    case Scheme::kFedAvg:
    case Scheme::kFedProx:
      run.runs.push_back(run_federated(fc, data.clients, scorer));
      break;
  }
  for (const RunResult& result : run.runs) {
    run.reports.push_back(
        evaluate_model(config.task, run.spec, result.best_weights, data.test, data.labels, config.eval));
  }
  run.report = average_reports(run.reports);
  return run;
}

// --- commands ----------------------------------------------------------------------

RunManifest cmd_run(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const PreparedData data = prepare_data(config);
  const fs::path root(config.output);
  log << fmt::format("{} {} on {} clients, {} train / {} dev / {} test items\n",
                     to_string(config.task), to_string(config.scheme), data.clients.size(),
                     data.train_size(), data.dev.size(), data.test.size());

  RunManifest manifest;
  manifest.version = std::string(kVersion);
  manifest.config_hash = config.hash();
  manifest.task = config.task;
  manifest.scheme = config.scheme;
  manifest.mu = config.mu;
  manifest.summary = "summary.csv";
  std::vector<EvalReport> reports;
  for (size_t i = 0; i < config.repeats; ++i) {
    const uint64_t seed = config.seed + i;
    const auto started = std::chrono::steady_clock::now();
    const SchemeRun run = run_scheme(config, data, seed);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string dir = "repeat_" + std::to_string(i);

    RepeatRecord record;
    record.seed = seed;
    record.report = dir + "/report.csv";
    record.metrics = dir + "/metrics.jsonl";
    record.strict_macro = run.report.strict_macro;
    record.lenient_macro = run.report.lenient_macro;
    record.wall_seconds = seconds;
    write_text_file(root / record.report, report_csv(run.report));
    std::ostringstream metrics;
    write_logs(metrics, run);
    write_text_file(root / record.metrics, metrics.str());
    for (size_t k = 0; k < run.runs.size(); ++k) {
      SavedModel model{config.task, run.spec, data.vocabulary, data.labels,
                       run.runs[k].best_weights};
      const std::string name =
          run.runs.size() == 1 ? "model.json" : "model_client" + std::to_string(k + 1) + ".json";
      write_text_file(root / dir / name, serialize_model(model));
    }
    manifest.repeats.push_back(record);
    reports.push_back(run.report);
    log << fmt::format("repeat {} seed {}: lenient {:.4f} strict {:.4f} ({:.1f}s)\n", i, seed,
                       run.report.lenient_macro, run.report.strict_macro, seconds);
  }
  write_text_file(root / manifest.summary, summary_csv(reports));
  write_text_file(root / "manifest.json", manifest_json(manifest).dump(2) + "\n");
  return manifest;
}

std::string sweep_csv(std::string_view key, std::span<const SweepRow> rows) {
  std::string out = fmt::format(
      "{},train_total,repeats,lenient_mean,lenient_std,strict_mean,strict_std,cell,error\n", key);
  for (const SweepRow& row : rows) {
    if (!row.error.empty()) {
      out += fmt::format("{},{},0,,,,,,\"{}\"\n", row.label, row.train_total, row.error);
      continue;
    }
    out += fmt::format("{},{},{},{:.6f},{},{:.6f},{},{},\n", row.label, row.train_total,
                       row.lenient.size(), mean_of(row.lenient), std_text(row.lenient),
                       mean_of(row.strict), std_text(row.strict), cell_or_gap(row.lenient, row.strict));
  }
  return out;
}

std::vector<SweepRow> cmd_sweep_clients(const ExperimentConfig& config,
                                        std::span<const size_t> client_counts, std::ostream& log) {
  config.validate();
  require(!client_counts.empty(), "sweep-clients needs at least one K");
  for (size_t k : client_counts) {
    require(k >= 2, "K=" + std::to_string(k) +
                        " is not a federation; use scheme centralized for the pooled model");
  }
  require(config.scheme == Scheme::kFedAvg || config.scheme == Scheme::kFedProx,
          "sweep-clients needs scheme fedavg or fedprox");
  require(config.data.partition == PartitionMode::kIidKFold,
          "sweep-clients repartitions the pooled data and needs partition iid");

  ExperimentConfig pooled_config = config;
  pooled_config.clients = 1;
  const PreparedData pooled = prepare_data(pooled_config);
  const Dataset train = pooled.pooled_train();

  std::vector<SweepRow> rows;
  for (size_t k : client_counts) {
    SweepRow row;
    try {
      PreparedData data = pooled;
      data.clients = partition_iid(train, k, config.seed).clients;
      data.client_names.clear();
      for (size_t i = 0; i < k; ++i) data.client_names.push_back("client" + std::to_string(i + 1));
      ExperimentConfig point = config;
      point.clients = k;
      row = run_sweep_point(point, data, std::to_string(k));
      log << fmt::format("K={}: lenient {:.4f} strict {:.4f}\n", k, mean_of(row.lenient),
                         mean_of(row.strict));
    } catch (const ValidationError& e) {
      row.label = std::to_string(k);
      row.train_total = train.size();
      row.error = e.what();
      log << fmt::format("K={}: {}\n", k, e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> cmd_sweep_mu(const ExperimentConfig& config, std::vector<double> mus,
                                   std::ostream& log) {
  if (mus.empty()) mus = kDefaultMuGrid;
  std::vector<double> unique;
  for (double mu : mus) {
    require(std::isfinite(mu) && mu >= 0.0, "mu must be non-negative, got " + real(mu));
    if (std::find(unique.begin(), unique.end(), mu) != unique.end()) {
      log << fmt::format("warning: duplicate mu {} ignored\n", mu);
      continue;
    }
    unique.push_back(mu);
  }
  ExperimentConfig base = config;
  base.scheme = Scheme::kFedAvg;
  base.mu = 0.0;
  base.validate();
  const PreparedData data = prepare_data(base);

  std::vector<SweepRow> rows;
  for (double mu : unique) {
    ExperimentConfig point = base;
    point.scheme = Scheme::kFedProx;
    point.mu = mu;
    const std::string label = mu == 0.0 ? "0 (fedavg-equivalent)" : fmt::format("{}", mu);
    rows.push_back(run_sweep_point(point, data, label));
    log << fmt::format("mu={}: lenient {:.4f} strict {:.4f}\n", label, mean_of(rows.back().lenient),
                       mean_of(rows.back().strict));
  }
  return rows;
}

MacroRow parse_report_macro(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("macro,", 0) != 0) continue;
    const auto fields = split_fields(line);
    require(fields.size() == 7, "report macro row has " + std::to_string(fields.size()) + " fields");
    return MacroRow{parse_real(fields[3]), parse_real(fields[6])};
  }
  throw ValidationError("report has no macro row");
}

std::string cmd_report(std::span<const fs::path> run_dirs) {
  require(!run_dirs.empty(), "report needs at least one run directory");
  struct Row {
    int order = 0;
    std::string scheme;
    std::string task;
    size_t found = 0;
    size_t expected = 0;
    std::string cell;
  };
  std::vector<Row> rows;
  std::vector<std::string> missing;
  for (const fs::path& dir : run_dirs) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
      missing.push_back(manifest_path.string());
      rows.push_back(Row{99, dir.string(), "?", 0, 0, "n/a"});
      continue;
    }
    const RunManifest manifest = parse_manifest(read_text_file(manifest_path));
    Row row;
    row.order = static_cast<int>(manifest.scheme);
    row.scheme = std::string(to_string(manifest.scheme));
    if (manifest.scheme == Scheme::kFedProx) row.scheme += fmt::format(" mu={}", manifest.mu);
    row.task = std::string(to_string(manifest.task));
    row.expected = manifest.repeats.size();
    std::vector<double> lenient, strict;
    for (const RepeatRecord& repeat : manifest.repeats) {
      const fs::path path = dir / repeat.report;
      if (!fs::exists(path)) {
        missing.push_back(path.string());
        continue;
      }
      const MacroRow macro = parse_report_macro(read_text_file(path));
      lenient.push_back(macro.lenient_f1);
      strict.push_back(macro.strict_f1);
    }
    row.found = lenient.size();
    row.cell = cell_or_gap(lenient, strict);

    const fs::path summary_path = dir / manifest.summary;
    if (!fs::exists(summary_path)) {
      missing.push_back(summary_path.string());
    } else if (row.found == row.expected && row.found >= 2) {
      const std::string summary = read_text_file(summary_path);
      for (auto [metric, values] : {std::pair{"lenient_macro", &lenient},
                                    std::pair{"strict_macro", &strict}}) {
        const auto entry = summary_entry(summary, metric);
        const MeanStd stats = aggregate_repeats(*values);
        require(entry && std::abs(entry->first - stats.mean) <= 1e-6 &&
                    std::abs(parse_real(entry->second) - stats.std) <= 1e-6,
                summary_path.string() + " disagrees with its repeat reports on " + metric);
      }
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.order, a.scheme) < std::tie(b.order, b.scheme);
  });

  size_t width = 6;
  for (const Row& row : rows) width = std::max(width, row.scheme.size());
  std::string out = fmt::format("{:<{}}  {:<4}  {:>7}  {}\n", "scheme", width, "task", "repeats",
                                "F1 lenient (strict)");
  for (const Row& row : rows) {
    out += fmt::format("{:<{}}  {:<4}  {:>7}  {}\n", row.scheme, width, row.task,
                       fmt::format("{}/{}", row.found, row.expected), row.cell);
  }
  if (!missing.empty()) {
    out += "missing:\n";
    for (const std::string& path : missing) out += "  " + path + "\n";
  }
  return out;
}

std::string serialize_model(const SavedModel& model) {
  Json json;
  json["format"] = "fedner-model";
  json["version"] = std::string(kVersion);
  json["task"] = to_string(model.task);
  json["spec"] = {{"kind", to_string(model.spec.kind)},
                  {"vocab_size", model.spec.vocab_size},
                  {"label_count", model.spec.label_count},
                  {"embed_dim", model.spec.embed_dim},
                  {"hidden_dim", model.spec.hidden_dim},
                  {"window_radius", model.spec.window_radius}};
  json["vocabulary"] = std::vector<std::string>(model.vocabulary.known_words().begin(),
                                                model.vocabulary.known_words().end());
  if (model.task == Task::kNer) {
    json["entity_types"] = model.labels.types();
  } else {
    json["relation_labels"] = model.labels.names();
  }
  Json weights;
  for (const Segment& segment : model.weights.layout().segments()) {
    const auto values = model.weights.segment(segment.name);
    weights[segment.name] = std::vector<double>(values.begin(), values.end());
  }
  json["weights"] = std::move(weights);
  return json.dump() + "\n";
}

SavedModel parse_model(std::string_view text) {
  SavedModel model;
  try {
    const Json json = Json::parse(text);
    require(json.value("format", "") == "fedner-model", "not a fedner model file");
    model.task = parse_task(json.at("task").get<std::string>());
    const Json& spec = json.at("spec");
    model.spec.kind = parse_model_kind(spec.at("kind").get<std::string>());
    model.spec.vocab_size = spec.at("vocab_size").get<size_t>();
    model.spec.label_count = spec.at("label_count").get<size_t>();
    model.spec.embed_dim = spec.at("embed_dim").get<size_t>();
    model.spec.hidden_dim = spec.at("hidden_dim").get<size_t>();
    model.spec.window_radius = spec.at("window_radius").get<size_t>();
    model.spec.validate();
    model.vocabulary = Vocabulary(json.at("vocabulary").get<std::vector<std::string>>());
    if (model.task == Task::kNer) {
      const auto types = json.at("entity_types").get<std::vector<std::string>>();
      model.labels = LabelSet::bio(std::set<std::string>(types.begin(), types.end()));
    } else {
      const auto names = json.at("relation_labels").get<std::vector<std::string>>();
      model.labels = LabelSet::relations(std::set<std::string>(names.begin(), names.end()));
    }
    require(model.vocabulary.size() == model.spec.vocab_size, "model vocabulary size mismatch");
    require(model.labels.size() == model.spec.label_count, "model label count mismatch");
    model.weights = ParamVector(model.spec.layout());
    for (const Segment& segment : model.weights.layout().segments()) {
      const auto values = json.at("weights").at(segment.name).get<std::vector<double>>();
      require(values.size() == segment.length(), "segment " + segment.name + " has the wrong size");
      std::copy(values.begin(), values.end(), model.weights.segment(segment.name).begin());
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
  return model;
}

BenchResult cmd_bench(const SavedModel& model, const Dataset& data) {
  require(!data.empty(), "bench needs a non-empty dataset");
  size_t sink = 0;
  auto predict = [&](const Example& example) {
    if (const auto* sentence = std::get_if<TaggedIds>(&example)) {
      sink += predict_tags(model.spec, model.weights, sentence->tokens).size();
    } else {
      sink += static_cast<size_t>(
          predict_relation(model.spec, model.weights, std::get<RelationIds>(example)));
    }
  };
  for (const Example& example : data) predict(example);  // warmup
  const auto started = std::chrono::steady_clock::now();
  for (const Example& example : data) predict(example);
  BenchResult result;
  result.instances = data.size();
  result.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.seconds_per_instance = result.total_seconds / static_cast<double>(data.size());
  result.instances_per_second = result.total_seconds > 0.0
                                    ? static_cast<double>(data.size()) / result.total_seconds
                                    : std::numeric_limits<double>::infinity();
  if (sink == static_cast<size_t>(-1)) result.instances = 0;  // keeps the loop observable
  return result;
}

Dataset load_for_model(const SavedModel& model, const fs::path& path) {
  const std::string text = read_text_file(path);
  if (model.task == Task::kNer) {
    std::vector<TaggedSentence> sentences = parse_conll(text);
    for (TaggedSentence& sentence : sentences) sentence = truncate(std::move(sentence));
    return encode_all<TaggedSentence>(sentences, model.vocabulary, model.labels);
  }
  const std::vector<RelationInstance> instances = parse_relations(text);
  return encode_all<RelationInstance>(instances, model.vocabulary, model.labels);
}

}  // namespace fedner
