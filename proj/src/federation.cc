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

#include "fedner/federation.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>

#include "fedner/common.h"
#include "fedner/rng.h"
#include "json.hpp"

namespace fedner {
namespace {

Schedule make_schedule(const FederationConfig& config, size_t sample_count) {
  Schedule schedule;
  schedule.base_lr = config.learning_rate;
  schedule.total_steps = static_cast<int64_t>(config.rounds * config.local_epochs *
                                              batches_per_epoch(sample_count, config.batch_size));
  schedule.warmup_steps = static_cast<int64_t>(config.warmup_fraction *
                                               static_cast<double>(schedule.total_steps));
  if (schedule.warmup_steps >= schedule.total_steps) schedule.warmup_steps = schedule.total_steps - 1;
  return schedule;
}

// Runs fn(k) for every client, in the requested dispatch order, on up to
// `workers` threads. The first exception is rethrown after all threads join.
void for_each_client(size_t count, const FederationConfig& config,
                     const std::function<void(size_t)>& fn) {
  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), size_t{0});
  if (config.reverse_client_order) std::reverse(order.begin(), order.end());
  if (config.workers <= 1 || count <= 1) {
    for (size_t k : order) fn(k);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> threads;
    for (size_t w = 0; w < std::min(config.workers, count); ++w) {
      threads.emplace_back([&] {
        for (size_t i = next++; i < count; i = next++) {
          try {
            fn(order[i]);
          } catch (...) {
            errors[order[i]] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

double mean(std::span<const double> values) {
  return values.empty() ? 0.0
                        : std::accumulate(values.begin(), values.end(), 0.0) /
                              static_cast<double>(values.size());
}

void select_best(RunResult& result, const DevScorer& scorer) {
  result.best_round = result.history.size();
  if (scorer) {
    size_t best = 0;
    for (size_t i = 1; i < result.history.size(); ++i) {
      if (result.history[i].dev.strict > result.history[best].dev.strict) best = i;
    }
    result.best_round = best + 1;
  }
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kFedAvg ? "fedavg" : "fedprox";
}

void FederationConfig::validate() const {
  model.validate();
  require(clients >= 1, "federation needs at least one client");
  require(rounds >= 1, "federation needs at least one round");
  require(local_epochs >= 1, "local epochs must be at least 1");
  require(batch_size >= 1, "batch size must be at least 1");
  require(mu >= 0.0, "mu must be non-negative");
  require(algorithm == Algorithm::kFedProx || mu == 0.0, "fedavg requires mu = 0");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(warmup_fraction >= 0.0 && warmup_fraction < 1.0,
          "warmup fraction must lie in [0, 1)");
}

size_t batches_per_epoch(size_t sample_count, size_t batch_size) {
  return (sample_count + batch_size - 1) / batch_size;
}

uint64_t client_round_seed(uint64_t seed, size_t client, size_t round) {
  return derive_seed(seed, client, round);
}

ClientState make_client(size_t id, std::shared_ptr<const Dataset> data,
                        const FederationConfig& config) {
  require(data != nullptr && !data->empty(),
          "client " + std::to_string(id) + " has an empty dataset");
  ClientState client;
  client.id = id;
  client.schedule = make_schedule(config, data->size());
  client.data = std::move(data);
  const Layout layout = config.model.layout();
  client.weights = ParamVector(layout);
  client.optimizer = OptimizerState::make(config.optimizer, layout, config.adam);
  return client;
}

ClientState local_update(ClientState client, const ParamVector& global_weights,
                         const FederationConfig& config, size_t round) {
  require_same_layout(client.weights, global_weights, "local update");
  client.weights = global_weights;
  const Dataset& data = *client.data;
  const ProximalTerm prox{config.mu, global_weights};
  Rng rng(client_round_seed(config.seed, client.id, round));
  std::vector<size_t> order(data.size());
  std::vector<const Example*> batch;
  for (size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(std::span<size_t>(order));
    double loss_sum = 0.0;
    size_t batch_count = 0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (size_t i = begin; i < end; ++i) batch.push_back(&data[order[i]]);
      LossGrad step = loss_and_grad(config.model, client.weights, batch);
      loss_sum += step.loss;
      ++batch_count;
      if (config.algorithm == Algorithm::kFedProx) {
        proximal_augment_in_place(step, client.weights, prox);
      }
      apply_step_in_place(client.optimizer, client.weights, step.grad,
                          lr_at(client.schedule, client.optimizer.step_count));
    }
    client.epoch_losses.push_back(loss_sum / static_cast<double>(batch_count));
  }
  return client;
}

ParamVector aggregate(std::span<const ClientModel> clients) {
  require(!clients.empty(), "cannot aggregate an empty client list");
  size_t total = 0;
  for (const ClientModel& client : clients) {
    require(client.sample_count > 0, "aggregated clients need a positive sample count");
    require_same_layout(client.weights, clients.front().weights, "aggregate");
    total += client.sample_count;
  }
  ParamVector result(clients.front().weights.layout());
  for (const ClientModel& client : clients) {
    const double gamma =
        static_cast<double>(client.sample_count) / static_cast<double>(total);
    for (size_t i = 0; i < result.size(); ++i) result[i] += gamma * client.weights[i];
  }
  return result;
}

RunResult run_federated(const FederationConfig& config, const std::vector<Dataset>& partitions,
                        const DevScorer& scorer) {
  config.validate();
  require(partitions.size() == config.clients,
          "federation configured for " + std::to_string(config.clients) + " clients but got " +
              std::to_string(partitions.size()) + " partitions");
  const auto started = std::chrono::steady_clock::now();

  std::vector<ClientState> clients;
  for (size_t k = 0; k < partitions.size(); ++k) {
    clients.push_back(make_client(k, std::make_shared<const Dataset>(partitions[k]), config));
  }

  RunResult result;
  ParamVector global = init_params(config.model, config.seed);
  result.client_round_loss.resize(clients.size());
  result.client_epoch_loss.resize(clients.size());
  for (size_t round = 0; round < config.rounds; ++round) {
    for_each_client(clients.size(), config, [&](size_t k) {
      clients[k].epoch_losses.clear();
      clients[k] = local_update(std::move(clients[k]), global, config, round);
    });

    std::vector<ClientModel> models;
    for (const ClientState& client : clients) {
      models.push_back(ClientModel{client.weights, client.sample_count()});
    }
    global = aggregate(models);

    RoundRecord record;
    record.round = round + 1;
    for (size_t k = 0; k < clients.size(); ++k) {
      const auto& losses = clients[k].epoch_losses;
      result.client_epoch_loss[k].insert(result.client_epoch_loss[k].end(), losses.begin(),
                                         losses.end());
      result.client_round_loss[k].push_back(mean(losses));
      record.client_loss.push_back(result.client_round_loss[k].back());
    }
    if (scorer) record.dev = scorer(global);
    result.history.push_back(std::move(record));
    if (config.record_trajectory) result.trajectory.push_back(global);
    select_best(result, scorer);
    if (result.best_round == round + 1) result.best_weights = global;
  }
  result.final_weights = std::move(global);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

RunResult run_centralized(const FederationConfig& config, const Dataset& pooled,
                          const DevScorer& scorer) {
  config.validate();
  require(!pooled.empty(), "centralized training needs a non-empty dataset");
  const auto started = std::chrono::steady_clock::now();

  ParamVector weights = init_params(config.model, config.seed);
  OptimizerState optimizer =
      OptimizerState::make(config.optimizer, weights.layout(), config.adam);
  const Schedule schedule = make_schedule(config, pooled.size());

  RunResult result;
  result.client_round_loss.resize(1);
  result.client_epoch_loss.resize(1);
  std::vector<size_t> order(pooled.size());
  std::vector<const Example*> batch;
  for (size_t round = 0; round < config.rounds; ++round) {
    Rng rng(client_round_seed(config.seed, 0, round));
    double round_loss = 0.0;
    for (size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
      std::iota(order.begin(), order.end(), size_t{0});
      rng.shuffle(std::span<size_t>(order));
      double loss_sum = 0.0;
      size_t batch_count = 0;
      for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
        batch.clear();
        for (size_t i = begin; i < std::min(order.size(), begin + config.batch_size); ++i) {
          batch.push_back(&pooled[order[i]]);
        }
        const LossGrad step = loss_and_grad(config.model, weights, batch);
        loss_sum += step.loss;
        ++batch_count;
        apply_step_in_place(optimizer, weights, step.grad,
                            lr_at(schedule, optimizer.step_count));
      }
      result.client_epoch_loss[0].push_back(loss_sum / static_cast<double>(batch_count));
      round_loss += result.client_epoch_loss[0].back();
    }
    result.client_round_loss[0].push_back(round_loss /
                                          static_cast<double>(config.local_epochs));

    RoundRecord record;
    record.round = round + 1;
    record.client_loss = {result.client_round_loss[0].back()};
    if (scorer) record.dev = scorer(weights);
    result.history.push_back(std::move(record));
    if (config.record_trajectory) result.trajectory.push_back(weights);
    select_best(result, scorer);
    if (result.best_round == round + 1) result.best_weights = weights;
  }
  result.final_weights = std::move(weights);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<RunResult> run_single_client(const FederationConfig& config,
                                         const std::vector<Dataset>& partitions,
                                         const DevScorer& scorer) {
  require(!partitions.empty(), "single-client training needs at least one partition");
  std::vector<RunResult> results;
  results.reserve(partitions.size());
  for (const Dataset& partition : partitions) {
    results.push_back(run_centralized(config, partition, scorer));
  }
  return results;
}

void write_round_log(std::ostream& out, const RunResult& result) {
  for (const RoundRecord& record : result.history) {
    nlohmann::ordered_json line;
    line["round"] = record.round;
    line["client_loss"] = record.client_loss;
    line["dev_strict"] = record.dev.strict;
    line["dev_lenient"] = record.dev.lenient;
    out << line.dump() << '\n';
  }
}

}  // namespace fedner
