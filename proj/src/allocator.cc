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

#include "crchfl/allocator.h"

#include <algorithm>
#include <optional>
#include <string>

#include "crchfl/ledger.h"

namespace crchfl {
namespace {

struct IntervalPair {
  int edge;
  int cloud;
};

std::vector<IntervalPair> StrictPairs(const AllocInputs& in) {
  std::vector<int> edges = in.candidate_edge_intervals;
  std::vector<int> clouds = in.candidate_cloud_intervals;
  std::sort(edges.begin(), edges.end());
  std::sort(clouds.begin(), clouds.end());
  std::vector<IntervalPair> pairs;
  for (int e : edges) {
    for (int c : clouds) {
      if (c > 0 && c < e) pairs.push_back({e, c});
    }
  }
  return pairs;
}

bool DegenerateAdmissible(const AllocInputs& in) {
  auto has_one = [](const std::vector<int>& v) {
    return std::find(v.begin(), v.end(), 1) != v.end();
  };
  return has_one(in.candidate_edge_intervals) && has_one(in.candidate_cloud_intervals);
}

Megabytes RoundCost(const AllocInputs& in, int cloud_interval) {
  return CloudRoundCost(in.topology, Mode::kCrchfl, cloud_interval, in.model_size);
}

// Stage I spend for x uploaded samples.
Megabytes StageOneCost(const AllocInputs& in, std::int64_t x) {
  if (x == 0) return Megabytes();
  return in.sample_size * x + in.release_cost;
}

// Largest x affordable next to T rounds, or -1 if not even x = 1 fits.
std::int64_t MaxSamples(const AllocInputs& in, Megabytes round_cost, std::int64_t rounds) {
  Megabytes left = in.budget - round_cost * rounds - in.release_cost;
  if (left < in.sample_size) return -1;
  return std::min(in.max_samples, left.micros() / in.sample_size.micros());
}

AllocationPlan MakePlan(const AllocInputs& in, IntervalPair pair, std::int64_t x,
                        std::int64_t rounds, bool degenerate) {
  AllocationPlan plan;
  plan.u1 = StageOneCost(in, x);
  plan.u2 = in.budget - plan.u1;
  plan.pretrain_batch = x;
  plan.edge_interval = pair.edge;
  plan.cloud_interval = pair.cloud;
  plan.cloud_rounds = rounds;
  plan.objective = ObjectiveValue(x, pair.edge, pair.cloud, rounds, in);
  plan.degenerate_pair = degenerate;
  return plan;
}

void Offer(std::optional<AllocationPlan>& best, const AllocationPlan& candidate) {
  if (!best || PlanPreferred(candidate, *best)) best = candidate;
}

// For fixed (Ie, Ic, T) the objective is non-decreasing in x, so the
// optimum is the smallest x whose objective equals the one at x_hi.
std::int64_t SmallestMaximizer(const AllocInputs& in, IntervalPair pair, std::int64_t rounds,
                               std::int64_t x_lo, std::int64_t x_hi) {
  double top = ObjectiveValue(x_hi, pair.edge, pair.cloud, rounds, in);
  while (x_lo < x_hi) {
    std::int64_t mid = x_lo + (x_hi - x_lo) / 2;
    if (ObjectiveValue(mid, pair.edge, pair.cloud, rounds, in) == top) {
      x_hi = mid;
    } else {
      x_lo = mid + 1;
    }
  }
  return x_hi;
}

std::optional<AllocationPlan> SolvePair(const AllocInputs& in, IntervalPair pair,
                                        bool degenerate) {
  Megabytes cost = RoundCost(in, pair.cloud);
  std::int64_t rounds_without_data = in.budget.micros() / cost.micros();
  if (rounds_without_data < 1) return std::nullopt;

  std::optional<AllocationPlan> best;
  // No pretraining: every megabyte goes to cloud rounds.
  Offer(best, MakePlan(in, pair, 0, rounds_without_data, degenerate));

  if (in.max_samples < 1) return best;
  Megabytes after_data = in.budget - in.release_cost - in.sample_size;
  if (after_data < cost) return best;
  std::int64_t t_max = after_data.micros() / cost.micros();

  // While x is pinned at max_samples the objective only grows with T, so
  // the scan starts at the last such T.
  std::int64_t t_start = 1;
  Megabytes after_full = in.budget - in.release_cost - in.sample_size * in.max_samples;
  if (after_full >= cost) t_start = after_full.micros() / cost.micros();

  for (std::int64_t t = t_start; t <= t_max; ++t) {
    std::int64_t x_hi = MaxSamples(in, cost, t);
    if (x_hi < 1) break;
    std::int64_t x = SmallestMaximizer(in, pair, t, 1, x_hi);
    Offer(best, MakePlan(in, pair, x, t, degenerate));
  }
  return best;
}

template <typename PairSolver>
AllocationPlan SolveOverPairs(const AllocInputs& in, PairSolver solve_pair) {
  std::optional<AllocationPlan> best;
  for (IntervalPair pair : StrictPairs(in)) {
    if (auto plan = solve_pair(pair, false)) Offer(best, *plan);
  }
  if (!best && DegenerateAdmissible(in)) best = solve_pair(IntervalPair{1, 1}, true);
  if (!best) {
    throw AllocationInfeasible("no admissible (edge_interval, cloud_interval) pair affords a "
                               "single cloud round within the budget");
  }
  return *best;
}

void ValidateInputs(const AllocInputs& in) {
  if (in.budget < Megabytes()) throw std::invalid_argument("budget must be >= 0");
  if (in.sample_size <= Megabytes()) throw std::invalid_argument("sample size must be > 0");
  if (in.model_size <= Megabytes()) throw std::invalid_argument("model size must be > 0");
  if (in.release_cost < Megabytes()) throw std::invalid_argument("release cost must be >= 0");
  if (in.candidate_edge_intervals.empty() || in.candidate_cloud_intervals.empty()) {
    throw std::invalid_argument("candidate interval sets must be non-empty");
  }
  if (in.max_samples < 0) throw std::invalid_argument("max_samples must be >= 0");
}

}  // namespace

double EffectiveSamples(const TopologySpec& topology, double y_scale) {
  if (!(y_scale > 0.0)) throw std::invalid_argument("y_scale must be > 0");
  return y_scale * static_cast<double>(topology.total_train());
}

AllocInputs MakeAllocInputs(const RunConfig& config) {
  AllocInputs in;
  in.budget = Megabytes::FromDouble(config.budget_mb);
  in.sample_size = Megabytes::FromDouble(config.sample_size_mb);
  in.model_size = Megabytes::FromDouble(config.model_size_mb);
  in.release_cost = config.charge_pretrain_release
                        ? PretrainReleaseCost(config.topology, in.model_size)
                        : Megabytes();
  in.alpha = config.alpha;
  in.gamma = config.gamma;
  in.d = config.d;
  in.y_effective = EffectiveSamples(config.topology, config.y_scale);
  in.candidate_edge_intervals = config.candidate_edge_intervals;
  in.candidate_cloud_intervals = config.candidate_cloud_intervals;
  in.topology = config.topology;
  in.max_samples = config.topology.total_train();
  return in;
}

double ObjectiveValue(std::int64_t x, int edge_interval, int cloud_interval,
                      std::int64_t cloud_rounds, const AllocInputs& inputs) {
  double product = static_cast<double>(edge_interval) * static_cast<double>(cloud_interval) *
                   static_cast<double>(cloud_rounds);
  if (!(product >= 1.0)) {
    throw std::invalid_argument("edge_interval * cloud_interval * cloud_rounds must be >= 1");
  }
  return inputs.alpha * static_cast<double>(x) +
         inputs.gamma * (1.0 - inputs.d / product) * inputs.y_effective;
}

bool PlanPreferred(const AllocationPlan& a, const AllocationPlan& b) {
  if (a.objective != b.objective) return a.objective > b.objective;
  if (a.cloud_rounds != b.cloud_rounds) return a.cloud_rounds > b.cloud_rounds;
  if (a.pretrain_batch != b.pretrain_batch) return a.pretrain_batch < b.pretrain_batch;
  long pa = static_cast<long>(a.edge_interval) * a.cloud_interval;
  long pb = static_cast<long>(b.edge_interval) * b.cloud_interval;
  if (pa != pb) return pa < pb;
  return a.edge_interval < b.edge_interval;
}

AllocationPlan SolveAllocation(const AllocInputs& inputs) {
  ValidateInputs(inputs);
  return SolveOverPairs(inputs, [&](IntervalPair pair, bool degenerate) {
    return SolvePair(inputs, pair, degenerate);
  });
}

AllocationPlan BruteForceOracle(const AllocInputs& inputs, std::int64_t max_points) {
  ValidateInputs(inputs);

  auto pairs = StrictPairs(inputs);
  if (DegenerateAdmissible(inputs)) pairs.push_back({1, 1});
  std::int64_t points = 0;
  for (IntervalPair pair : pairs) {
    Megabytes cost = RoundCost(inputs, pair.cloud);
    for (std::int64_t t = 1; cost * t <= inputs.budget; ++t) {
      points += 1 + std::max<std::int64_t>(0, MaxSamples(inputs, cost, t));
      if (points > max_points) {
        throw SearchSpaceTooLarge("oracle search space exceeds " + std::to_string(max_points) +
                                  " points");
      }
    }
  }

  return SolveOverPairs(inputs, [&](IntervalPair pair, bool degenerate) {
    std::optional<AllocationPlan> best;
    Megabytes cost = RoundCost(inputs, pair.cloud);
    for (std::int64_t t = 1; cost * t <= inputs.budget; ++t) {
      for (std::int64_t x = 0; x <= inputs.max_samples; ++x) {
        if (StageOneCost(inputs, x) + cost * t > inputs.budget) break;
        Offer(best, MakePlan(inputs, pair, x, t, degenerate));
      }
    }
    return best;
  });
}

std::string CheckPlanConstraints(const AllocationPlan& plan, const AllocInputs& in) {
  if (plan.u1 + plan.u2 != in.budget) return "u1 + u2 != budget";
  if (plan.u1 < Megabytes()) return "u1 < 0";
  if (plan.u2 <= Megabytes()) return "u2 <= 0";
  if (plan.pretrain_batch < 0) return "pretrain_batch < 0";
  if (plan.pretrain_batch > in.max_samples) return "pretrain_batch exceeds available samples";
  if (in.sample_size * plan.pretrain_batch > plan.u1) return "x * D > u1";
  if (plan.cloud_rounds < 1) return "cloud_rounds < 1";
  if (RoundCost(in, plan.cloud_interval) * plan.cloud_rounds > plan.u2) {
    return "2 * E * M * T > u2";
  }
  if (plan.cloud_interval < 1) return "cloud_interval < 1";
  if (plan.degenerate_pair) {
    if (plan.edge_interval != 1 || plan.cloud_interval != 1) return "bad degenerate pair";
  } else if (!(plan.cloud_interval < plan.edge_interval)) {
    return "cloud_interval >= edge_interval";
  }
  return {};
}

}  // namespace crchfl
