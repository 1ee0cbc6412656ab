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

#include "crchfl/federation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "crchfl/synth.h"

namespace crchfl {
namespace {

// Stream tags for DeriveSeed.
constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kVehicleStream = 11;
constexpr std::uint64_t kUploadStream = 12;
constexpr std::uint64_t kPretrainStream = 13;

std::vector<ParamVector> ParamsOf(std::span<const TwoBranchModel> models) {
  std::vector<ParamVector> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(m.params());
  return out;
}

class Orchestrator {
 public:
  Orchestrator(const RunConfig& config, const FederatedData& data, const RunOptions& options,
               Mode mode)
      : config_(config), data_(data), options_(options), mode_(mode) {
    const auto& topo = config_.topology;
    if (static_cast<int>(data_.vehicle_train.size()) != topo.total_vehicles()) {
      throw std::invalid_argument("federated data does not match the topology");
    }
    if (options_.train && data_.test_set.empty()) {
      throw std::invalid_argument("federated data has an empty test set");
    }
    model_size_ = Megabytes::FromDouble(config_.model_size_mb);
    sample_size_ = Megabytes::FromDouble(config_.sample_size_mb);
    state_.ledger = ThroughputLedger(Megabytes::FromDouble(config_.budget_mb));

    Rng init_rng(DeriveSeed(config_.seed, {kInitStream}));
    state_.cloud_model = TwoBranchModel::Initialize(ModelDims{}, init_rng);
    for (int v = 0; v < topo.total_vehicles(); ++v) {
      state_.vehicle_models.push_back(state_.cloud_model);
      state_.adam_states.push_back(AdamState::ZerosLike(state_.cloud_model.params()));
      vehicle_rngs_.emplace_back(DeriveSeed(config_.seed, {kVehicleStream,
                                                           static_cast<std::uint64_t>(v)}));
    }
    if (mode_ != Mode::kSfl) {
      state_.edge_models.assign(topo.num_towns, state_.cloud_model.params());
    }
  }

  RunReport Run(const AllocationPlan& plan, std::optional<std::int64_t> max_rounds) {
    state_.plan = plan;
    bool stage_one_ok = true;
    if (mode_ == Mode::kCrchfl) stage_one_ok = StageOne();
    Record(0);

    StopReason reason = StopReason::kBudgetInsufficient;
    if (stage_one_ok) {
      Megabytes cost = CloudRoundCost(config_.topology, mode_, plan.cloud_interval, model_size_);
      while (true) {
        if (max_rounds && state_.round >= *max_rounds) {
          reason = StopReason::kPlanExhausted;
          break;
        }
        if (!state_.ledger.CanAfford(cost)) {
          reason = StopReason::kBudgetInsufficient;
          break;
        }
        state_.round += 1;
        if (mode_ == Mode::kSfl) {
          SingleHopRound();
        } else {
          HierarchicalRound();
        }
        if (options_.on_cloud_round) options_.on_cloud_round(state_);
        Record(state_.round);
      }
    }

    RunReport report;
    report.mode = mode_;
    report.seed = config_.seed;
    report.budget = state_.ledger.budget();
    report.plan = plan;
    report.metrics = std::move(metrics_);
    report.events = state_.ledger.events();
    report.completed_rounds = state_.round;
    report.stop_reason = reason;
    report.consumed = state_.ledger.consumed();
    report.best = best_;
    report.best_model = std::move(best_model_);
    return report;
  }

 private:
  void Charge(TransferKind kind, Link link, Megabytes size, Stage stage) {
    TransferEvent event{kind, link, size, stage, state_.round};
    if (state_.ledger.TryConsume(event) != ConsumeResult::kAccepted) {
      throw std::logic_error("transfer rejected inside a round that was checked as affordable");
    }
  }

  bool TryCharge(TransferKind kind, Link link, Megabytes size, Stage stage) {
    TransferEvent event{kind, link, size, stage, state_.round};
    return state_.ledger.TryConsume(event) == ConsumeResult::kAccepted;
  }

  // Data upload, centralized pretraining and release. Returns false when
  // the budget cannot pay for stage I.
  bool StageOne() {
    const auto& topo = config_.topology;
    std::int64_t x = state_.plan.pretrain_batch;
    if (x <= 0) return true;
    if (x > topo.total_train()) {
      throw std::invalid_argument("pretrain_batch exceeds the samples held by vehicles");
    }
    auto quota = UploadQuota(x, topo.train_sizes);
    Rng upload_rng(DeriveSeed(config_.seed, {kUploadStream}));
    SampleBatch uploads;
    for (int v = 0; v < topo.total_vehicles(); ++v) {
      if (quota[v] == 0) continue;
      if (!TryCharge(TransferKind::kDataUpload, Link::kVehicleCloud, sample_size_ * quota[v],
                     Stage::kI)) {
        return false;
      }
      // Partial Fisher-Yates: the first quota[v] slots are a uniform draw
      // without replacement.
      std::vector<std::size_t> rows(topo.train_sizes[v]);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      for (std::int64_t i = 0; i < quota[v]; ++i) {
        auto j = i + upload_rng.UniformInt(rows.size() - i);
        std::swap(rows[i], rows[j]);
      }
      rows.resize(quota[v]);
      if (options_.train) uploads.Append(data_.vehicle_train[v].Gather(rows));
    }

    if (options_.train) {
      if (uploads.empty()) throw std::logic_error("pretraining expected uploaded samples");
      Rng pretrain_rng(DeriveSeed(config_.seed, {kPretrainStream}));
      state_.cloud_model =
          Pretrain(state_.cloud_model, uploads, config_.train.pretrain_epochs, config_.train,
                   pretrain_rng)
              .model;
    }

    if (config_.charge_pretrain_release) {
      for (int n = 0; n < topo.num_towns; ++n) {
        if (!TryCharge(TransferKind::kModelDown, Link::kEdgeCloud, model_size_, Stage::kI)) {
          return false;
        }
      }
      for (int v = 0; v < topo.total_vehicles(); ++v) {
        if (!TryCharge(TransferKind::kModelDown, Link::kVehicleEdge, model_size_, Stage::kI)) {
          return false;
        }
      }
    }
    for (auto& m : state_.vehicle_models) m = state_.cloud_model;
    for (auto& e : state_.edge_models) e = state_.cloud_model.params();
    return true;
  }

  void TrainVehicles() {
    if (!options_.train) return;
    int epochs = state_.plan.edge_interval;
    for (std::size_t v = 0; v < state_.vehicle_models.size(); ++v) {
      LocalTrain(state_.vehicle_models[v], state_.adam_states[v], data_.vehicle_train[v], epochs,
                 config_.train, vehicle_rngs_[v]);
    }
  }

  void HierarchicalRound() {
    const auto& topo = config_.topology;
    int cloud_interval = state_.plan.cloud_interval;
    for (int agg = 1; agg <= cloud_interval; ++agg) {
      TrainVehicles();
      for (int v = 0; v < topo.total_vehicles(); ++v) {
        Charge(TransferKind::kModelUp, Link::kVehicleEdge, model_size_, Stage::kII);
      }
      for (int n = 0; n < topo.num_towns; ++n) {
        int first = topo.vehicle_index(n, 0);
        int count = topo.vehicles_per_town[n];
        auto members = ParamsOf(
            std::span<const TwoBranchModel>(state_.vehicle_models).subspan(first, count));
        state_.edge_models[n] = EdgeAggregate(members, EdgeWeights(topo, n));
      }
      if (agg < cloud_interval) {
        for (int n = 0; n < topo.num_towns; ++n) {
          for (int k = 0; k < topo.vehicles_per_town[n]; ++k) {
            Charge(TransferKind::kModelDown, Link::kVehicleEdge, model_size_, Stage::kII);
            state_.vehicle_models[topo.vehicle_index(n, k)].params() = state_.edge_models[n];
          }
        }
      }
    }
    for (int n = 0; n < topo.num_towns; ++n) {
      Charge(TransferKind::kModelUp, Link::kEdgeCloud, model_size_, Stage::kIII);
    }
    state_.cloud_model.params() = CloudAggregate(state_.edge_models, topo);
    for (int n = 0; n < topo.num_towns; ++n) {
      Charge(TransferKind::kModelDown, Link::kEdgeCloud, model_size_, Stage::kIII);
      state_.edge_models[n] = state_.cloud_model.params();
    }
    for (int v = 0; v < topo.total_vehicles(); ++v) {
      Charge(TransferKind::kModelDown, Link::kVehicleEdge, model_size_, Stage::kII);
      state_.vehicle_models[v] = state_.cloud_model;
    }
  }

  void SingleHopRound() {
    const auto& topo = config_.topology;
    TrainVehicles();
    for (int v = 0; v < topo.total_vehicles(); ++v) {
      Charge(TransferKind::kModelUp, Link::kVehicleCloud, model_size_, Stage::kIII);
    }
    auto params = ParamsOf(state_.vehicle_models);
    state_.cloud_model.params() = WeightedAverage(params, FedAvgWeights(topo.train_sizes));
    for (int v = 0; v < topo.total_vehicles(); ++v) {
      Charge(TransferKind::kModelDown, Link::kVehicleCloud, model_size_, Stage::kIII);
      state_.vehicle_models[v] = state_.cloud_model;
    }
  }

  void Record(int round) {
    if (!options_.train) return;
    MetricsRecord m = Evaluate(state_.cloud_model, data_.test_set, round,
                               state_.ledger.consumed().value());
    metrics_.push_back(m);
    bool better = !best_ || m.accuracy > best_->accuracy ||
                  (m.accuracy == best_->accuracy && m.loss < best_->loss);
    if (better) {
      best_ = m;
      best_model_ = state_.cloud_model.params();
    }
  }

  const RunConfig& config_;
  const FederatedData& data_;
  const RunOptions& options_;
  Mode mode_;
  Megabytes model_size_;
  Megabytes sample_size_;
  FederationState state_;
  std::vector<Rng> vehicle_rngs_;
  std::vector<MetricsRecord> metrics_;
  std::optional<MetricsRecord> best_;
  std::optional<ParamVector> best_model_;
};

double PlanObjective(const RunConfig& config, const AllocationPlan& plan) {
  if (plan.cloud_rounds < 1) return 0.0;
  return ObjectiveValue(plan.pretrain_batch, plan.edge_interval, plan.cloud_interval,
                        plan.cloud_rounds, MakeAllocInputs(config));
}

AllocationPlan BaselinePlan(const RunConfig& config, Mode mode) {
  AllocationPlan plan;
  Megabytes budget = Megabytes::FromDouble(config.budget_mb);
  Megabytes model_size = Megabytes::FromDouble(config.model_size_mb);
  plan.u1 = Megabytes();
  plan.u2 = budget;
  plan.pretrain_batch = 0;
  plan.edge_interval = config.baseline_edge_interval();
  plan.cloud_interval = mode == Mode::kSfl ? 1 : config.baseline_cloud_interval();
  plan.cloud_rounds = RoundsAffordable(
      budget, model_size, TransfersPerCloudRound(config.topology, mode, plan.cloud_interval));
  plan.objective = PlanObjective(config, plan);
  return plan;
}

void TrainEpochs(TwoBranchModel& model, AdamState& adam, const SampleBatch& data, int epochs,
                 const TrainHyper& hyper, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto batch_size = static_cast<std::size_t>(hyper.batch_size);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::size_t len = std::min(batch_size, order.size() - start);
      SampleBatch batch = data.Gather(std::span<const std::size_t>(order).subspan(start, len));
      LossAndGradient lg = LossAndGrad(model, batch);
      AdamStep(model.params(), lg.grad, adam, hyper);
    }
  }
}

}  // namespace

std::string_view StopReasonName(StopReason reason) {
  return reason == StopReason::kPlanExhausted ? "PlanExhausted" : "BudgetInsufficient";
}

FederatedData GenerateFederatedData(const RunConfig& config) {
  const auto& topo = config.topology;
  FederatedData data;
  for (int n = 0; n < topo.num_towns; ++n) {
    TownProfile profile = MakeTownProfile(n, config.data);
    for (int k = 0; k < topo.vehicles_per_town[n]; ++k) {
      data.vehicle_train.push_back(GenerateVehicleDataset(
          profile, k, topo.train_sizes[topo.vehicle_index(n, k)], config.seed));
    }
    data.test_set.Append(GenerateTownTestSet(profile, topo.test_sizes[n], config.seed));
  }
  return data;
}

PretrainResult Pretrain(const TwoBranchModel& cloud, const SampleBatch& uploads, int epochs,
                        const TrainHyper& hyper, Rng& rng) {
  PretrainResult result{cloud, 0};
  if (uploads.empty() || epochs <= 0) return result;
  AdamState adam = AdamState::ZerosLike(cloud.params());
  TrainEpochs(result.model, adam, uploads, epochs, hyper, rng);
  result.adam_steps = adam.step_count;
  return result;
}

void LocalTrain(TwoBranchModel& model, AdamState& adam, const SampleBatch& data,
                int edge_interval, const TrainHyper& hyper, Rng& rng) {
  if (edge_interval < 1) throw std::invalid_argument("edge_interval must be >= 1");
  if (data.empty()) throw std::invalid_argument("local training needs data");
  TrainEpochs(model, adam, data, edge_interval, hyper, rng);
}

std::vector<double> FedAvgWeights(std::span<const std::int64_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("FedAvg needs at least one dataset");
  double total = 0.0;
  for (auto s : sizes) {
    if (s <= 0) throw std::invalid_argument("dataset sizes must be positive");
    total += static_cast<double>(s);
  }
  std::vector<double> w;
  w.reserve(sizes.size());
  for (auto s : sizes) w.push_back(static_cast<double>(s) / total);
  return w;
}

std::vector<double> EdgeWeights(const TopologySpec& topology, int town) {
  int first = topology.vehicle_index(town, 0);
  return FedAvgWeights(
      std::span<const std::int64_t>(topology.train_sizes).subspan(first,
                                                                  topology.vehicles_per_town[town]));
}

std::vector<double> CloudWeights(const TopologySpec& topology) {
  std::vector<std::int64_t> totals;
  for (int n = 0; n < topology.num_towns; ++n) totals.push_back(topology.town_train_total(n));
  return FedAvgWeights(totals);
}

ParamVector WeightedAverage(std::span<const ParamVector> models, std::span<const double> weights) {
  if (models.empty()) throw std::invalid_argument("nothing to aggregate");
  if (models.size() != weights.size()) {
    throw std::invalid_argument("one weight per model is required");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("aggregation weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("aggregation weights must sum to 1");
  }
  const ParamVector& base = models.front();
  for (const auto& m : models) {
    if (m.size() != base.size() || !(*m.layout == *base.layout)) {
      throw std::invalid_argument("aggregated models have different layouts");
    }
  }
  // base + sum_i w_i (m_i - base): equal to sum_i w_i m_i when the weights
  // sum to one, and exactly base when all models coincide.
  ParamVector out = base;
  for (std::size_t i = 1; i < models.size(); ++i) {
    const auto& values = models[i].values;
    double w = weights[i];
    for (std::size_t j = 0; j < out.values.size(); ++j) {
      out.values[j] += w * (values[j] - base.values[j]);
    }
  }
  return out;
}

ParamVector EdgeAggregate(std::span<const ParamVector> vehicle_models,
                          std::span<const double> weights) {
  return WeightedAverage(vehicle_models, weights);
}

ParamVector CloudAggregate(std::span<const ParamVector> edge_models,
                           const TopologySpec& topology) {
  if (static_cast<int>(edge_models.size()) != topology.num_towns) {
    throw std::invalid_argument("one edge model per town is required");
  }
  return WeightedAverage(edge_models, CloudWeights(topology));
}

std::vector<std::int64_t> UploadQuota(std::int64_t x, std::span<const std::int64_t> sizes) {
  std::int64_t total = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
  if (x < 0 || x > total) throw std::invalid_argument("upload count outside [0, total samples]");
  std::vector<std::int64_t> quota(sizes.size());
  std::vector<std::pair<std::int64_t, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto scaled = static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(sizes[i]);
    quota[i] = static_cast<std::int64_t>(scaled / static_cast<unsigned __int128>(total));
    remainders.emplace_back(
        static_cast<std::int64_t>(scaled % static_cast<unsigned __int128>(total)), i);
    assigned += quota[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t i = 0; assigned < x; ++i, ++assigned) quota[remainders[i].second] += 1;
  return quota;
}

RunReport RunCrchfl(const RunConfig& config, const FederatedData& data, const RunOptions& options,
                    std::optional<AllocationPlan> plan) {
  config.Validate();
  bool feasible = true;
  if (!plan) {
    try {
      plan = SolveAllocation(MakeAllocInputs(config));
    } catch (const AllocationInfeasible&) {
      feasible = false;
      plan = BaselinePlan(config, Mode::kCrchfl);
      plan->cloud_rounds = 0;
      plan->objective = 0.0;
    }
  }
  if (plan->edge_interval < 1 || plan->cloud_interval < 1 || plan->pretrain_batch < 0) {
    throw std::invalid_argument("allocation plan has non-positive intervals");
  }
  Orchestrator orchestrator(config, data, options, Mode::kCrchfl);
  RunReport report = orchestrator.Run(*plan, plan->cloud_rounds);
  if (!feasible) report.stop_reason = StopReason::kBudgetInsufficient;
  return report;
}

RunReport RunHfl(const RunConfig& config, const FederatedData& data, const RunOptions& options) {
  config.Validate();
  Orchestrator orchestrator(config, data, options, Mode::kHfl);
  return orchestrator.Run(BaselinePlan(config, Mode::kHfl), std::nullopt);
}

RunReport RunSfl(const RunConfig& config, const FederatedData& data, const RunOptions& options) {
  config.Validate();
  Orchestrator orchestrator(config, data, options, Mode::kSfl);
  return orchestrator.Run(BaselinePlan(config, Mode::kSfl), std::nullopt);
}

RunReport Simulate(const RunConfig& config, const RunOptions& options) {
  FederatedData data = options.train ? GenerateFederatedData(config) : FederatedData{};
  if (!options.train) data.vehicle_train.resize(config.topology.total_vehicles());
  switch (config.mode) {
    case Mode::kCrchfl:
      return RunCrchfl(config, data, options);
    case Mode::kHfl:
      return RunHfl(config, data, options);
    case Mode::kSfl:
      return RunSfl(config, data, options);
  }
  throw std::logic_error("unknown mode");
}

}  // namespace crchfl
