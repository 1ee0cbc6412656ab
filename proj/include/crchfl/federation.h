/*
 * Copyright 2026 The CRCHFL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CRCHFL_FEDERATION_H_
#define CRCHFL_FEDERATION_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "crchfl/allocator.h"
#include "crchfl/config.h"
#include "crchfl/ledger.h"
#include "crchfl/model.h"
#include "crchfl/rng.h"

namespace crchfl {

// Per-vehicle training sets (town-major vehicle order) and the pooled test
// set of all towns.
struct FederatedData {
  std::vector<SampleBatch> vehicle_train;
  SampleBatch test_set;
};

FederatedData GenerateFederatedData(const RunConfig& config);

struct FederationState {
  std::vector<TwoBranchModel> vehicle_models;  // town-major
  std::vector<AdamState> adam_states;
  std::vector<ParamVector> edge_models;  // one per town; empty for SFL
  TwoBranchModel cloud_model;
  ThroughputLedger ledger{Megabytes()};
  AllocationPlan plan;
  int round = 0;
};

enum class StopReason { kPlanExhausted, kBudgetInsufficient };
std::string_view StopReasonName(StopReason reason);

struct RunReport {
  Mode mode = Mode::kCrchfl;
  std::uint64_t seed = 0;
  Megabytes budget;
  AllocationPlan plan;
  std::vector<MetricsRecord> metrics;
  std::vector<TransferEvent> events;
  int completed_rounds = 0;
  StopReason stop_reason = StopReason::kPlanExhausted;
  Megabytes consumed;
  // Highest accuracy snapshot (ties: lower loss, then earlier round).
  std::optional<MetricsRecord> best;
  std::optional<ParamVector> best_model;
};

struct RunOptions {
  // When false only the message pattern and the ledger run; no training or
  // evaluation happens.
  bool train = true;
  // Called after every cloud aggregation and release.
  std::function<void(const FederationState&)> on_cloud_round;
};

struct PretrainResult {
  TwoBranchModel model;
  std::int64_t adam_steps = 0;
};

// Centralized mini-batch Adam over the uploaded samples. Zero uploads or
// zero epochs return the input model unchanged.
PretrainResult Pretrain(const TwoBranchModel& cloud, const SampleBatch& uploads, int epochs,
                        const TrainHyper& hyper, Rng& rng);

// `edge_interval` full shuffled passes of mini-batch Adam. Throws
// std::invalid_argument for edge_interval < 1.
void LocalTrain(TwoBranchModel& model, AdamState& adam, const SampleBatch& data,
                int edge_interval, const TrainHyper& hyper, Rng& rng);

// FedAvg weights |T_k| / sum |T_k| over the given dataset sizes.
std::vector<double> FedAvgWeights(std::span<const std::int64_t> sizes);
std::vector<double> EdgeWeights(const TopologySpec& topology, int town);
std::vector<double> CloudWeights(const TopologySpec& topology);

// Coordinate-wise weighted mean. Weights must sum to 1 within 1e-12 and all
// models must share one layout. Identical inputs give that input back
// bit-for-bit.
ParamVector WeightedAverage(std::span<const ParamVector> models, std::span<const double> weights);
ParamVector EdgeAggregate(std::span<const ParamVector> vehicle_models,
                          std::span<const double> weights);
ParamVector CloudAggregate(std::span<const ParamVector> edge_models,
                           const TopologySpec& topology);

// Splits x uploads across vehicles proportionally to dataset size
// (largest remainder, ties to the lower index).
std::vector<std::int64_t> UploadQuota(std::int64_t x, std::span<const std::int64_t> sizes);

// Three-stage protocol. Uses `plan` when given, otherwise solves the
// allocation from the config.
RunReport RunCrchfl(const RunConfig& config, const FederatedData& data,
                    const RunOptions& options = {},
                    std::optional<AllocationPlan> plan = std::nullopt);
// Hierarchical baseline: no pretraining, fixed intervals, runs until the
// budget cannot pay for another cloud round.
RunReport RunHfl(const RunConfig& config, const FederatedData& data,
                 const RunOptions& options = {});
// Single-hop baseline: vehicles exchange models with the cloud directly.
RunReport RunSfl(const RunConfig& config, const FederatedData& data,
                 const RunOptions& options = {});

// Generates the synthetic data and dispatches on config.mode.
RunReport Simulate(const RunConfig& config, const RunOptions& options = {});

}  // namespace crchfl

#endif  // CRCHFL_FEDERATION_H_
