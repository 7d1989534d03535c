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

#ifndef FEDNER_FEDERATION_H_
#define FEDNER_FEDERATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "fedner/model.h"
#include "fedner/optim.h"
#include "fedner/param_vector.h"

namespace fedner {

enum class Algorithm { kFedAvg, kFedProx };

std::string_view to_string(Algorithm algorithm);

// Every hyper-parameter of the server loop and the client local update.
struct FederationConfig {
  ModelSpec model;
  size_t clients = 1;       // K
  size_t rounds = 1;        // T
  size_t local_epochs = 1;  // R
  size_t batch_size = 16;   // B
  Algorithm algorithm = Algorithm::kFedAvg;
  double mu = 0.0;          // proximal weight; fedavg requires 0
  OptimizerKind optimizer = OptimizerKind::kAdam;
  AdamConfig adam;
  double learning_rate = 1e-3;
  double warmup_fraction = 0.0;  // of each worker's total step count
  uint64_t seed = 1;
  // Execution knobs; results are bit-identical for every setting.
  size_t workers = 1;
  bool reverse_client_order = false;
  bool record_trajectory = false;

  void validate() const;
};

// Dev-set metric pair; model selection maximizes `strict`.
struct DevScore {
  double strict = 0.0;
  double lenient = 0.0;
  bool operator==(const DevScore&) const = default;
};

using DevScorer = std::function<DevScore(const ParamVector&)>;

struct ClientState {
  size_t id = 0;
  std::shared_ptr<const Dataset> data;
  ParamVector weights;
  OptimizerState optimizer;
  Schedule schedule;
  std::vector<double> epoch_losses;  // one mean batch loss per local epoch

  size_t sample_count() const { return data->size(); }
};

// Builds a client over a non-empty dataset. Its schedule spans
// rounds * local_epochs * ceil(n_k / B) steps.
ClientState make_client(size_t id, std::shared_ptr<const Dataset> data,
                        const FederationConfig& config);

size_t batches_per_epoch(size_t sample_count, size_t batch_size);

// Stream seed for (client, round): independent of execution order.
uint64_t client_round_seed(uint64_t seed, size_t client, size_t round);

// Copies `global_weights` into the client and runs `local_epochs` epochs of
// shuffled mini-batch steps, adding the proximal term for fedprox.
// `round` is zero-based.
ClientState local_update(ClientState client, const ParamVector& global_weights,
                         const FederationConfig& config, size_t round);

struct ClientModel {
  const ParamVector& weights;
  size_t sample_count;
};

// Sample-weighted mean sum_k (n_k / n) w_k.
ParamVector aggregate(std::span<const ClientModel> clients);

struct RoundRecord {
  size_t round = 0;  // one-based
  std::vector<double> client_loss;
  DevScore dev;
};

struct RunResult {
  ParamVector best_weights;
  ParamVector final_weights;
  size_t best_round = 0;  // one-based
  std::vector<std::vector<double>> client_round_loss;  // K x T
  std::vector<std::vector<double>> client_epoch_loss;  // K x (T * R)
  std::vector<RoundRecord> history;
  std::vector<ParamVector> trajectory;  // global weights after each round
  double wall_seconds = 0.0;
};

// Server loop: dispatch, local updates, aggregation, dev evaluation.
// `scorer` may be empty, in which case the final round is reported.
RunResult run_federated(const FederationConfig& config, const std::vector<Dataset>& partitions,
                        const DevScorer& scorer);

// One worker on the pooled data for rounds * local_epochs epochs, evaluated
// every local_epochs epochs. The proximal term never applies.
RunResult run_centralized(const FederationConfig& config, const Dataset& pooled,
                          const DevScorer& scorer);

// An independent centralized run on each partition.
std::vector<RunResult> run_single_client(const FederationConfig& config,
                                         const std::vector<Dataset>& partitions,
                                         const DevScorer& scorer);

// One JSON object per round: round, client_loss, dev_strict, dev_lenient.
void write_round_log(std::ostream& out, const RunResult& result);

}  // namespace fedner

#endif  // FEDNER_FEDERATION_H_
