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

#ifndef CRCHFL_ALLOCATOR_H_
#define CRCHFL_ALLOCATOR_H_

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "crchfl/config.h"
#include "crchfl/units.h"

namespace crchfl {

// Everything the throughput allocation problem needs. The objective is
//
//   S(x, Ie, Ic, T) = alpha * x + gamma * (1 - d / (Ie * Ic * T)) * y
//
// maximized subject to
//
//   x * D + [x > 0] * release + T * 2 * E * M(Ic) <= budget,
//   0 <= x <= max_samples,  T >= 1,  0 < Ic < Ie.
struct AllocInputs {
  Megabytes budget;
  Megabytes sample_size;   // D
  Megabytes model_size;    // E
  // Charged once whenever x > 0: the downlink of the pretrained model.
  Megabytes release_cost;
  double alpha = 0.5;
  double gamma = 0.9;
  double d = 1.0;
  double y_effective = 0.0;
  std::vector<int> candidate_edge_intervals;
  std::vector<int> candidate_cloud_intervals;
  TopologySpec topology;
  // Vehicles cannot upload more samples than they hold.
  std::int64_t max_samples = 0;
};

struct AllocationPlan {
  Megabytes u1;  // stage I: data upload plus model release
  Megabytes u2;  // stages II and III: model transfer
  std::int64_t pretrain_batch = 0;
  int edge_interval = 1;
  int cloud_interval = 1;
  std::int64_t cloud_rounds = 0;
  double objective = 0.0;
  // Set when the plan uses Ie == Ic == 1, admitted only because no pair
  // with Ic < Ie is feasible.
  bool degenerate_pair = false;

  double u1_mb() const { return u1.value(); }
  double u2_mb() const { return u2.value(); }
  friend bool operator==(const AllocationPlan&, const AllocationPlan&) = default;
};

class AllocationInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SearchSpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

AllocInputs MakeAllocInputs(const RunConfig& config);

// y = y_scale * total distributed training samples.
double EffectiveSamples(const TopologySpec& topology, double y_scale);

// Throws std::invalid_argument when edge_interval * cloud_interval *
// cloud_rounds < 1.
double ObjectiveValue(std::int64_t x, int edge_interval, int cloud_interval,
                      std::int64_t cloud_rounds, const AllocInputs& inputs);

// Deterministic preference between two plans: higher objective, then more
// cloud rounds, then fewer samples, then smaller Ie * Ic, then smaller Ie.
bool PlanPreferred(const AllocationPlan& candidate, const AllocationPlan& incumbent);

// Exact integer optimum. Throws AllocationInfeasible when no admissible
// pair affords a single cloud round.
AllocationPlan SolveAllocation(const AllocInputs& inputs);

// Exhaustive enumeration of every feasible (x, Ie, Ic, T). Reference for
// SolveAllocation; throws SearchSpaceTooLarge above `max_points`.
AllocationPlan BruteForceOracle(const AllocInputs& inputs,
                                std::int64_t max_points = 10'000'000);

// Plan checks used by tests and the CLI. Returns an empty string when the
// plan satisfies every constraint, otherwise a description of the first
// violation.
std::string CheckPlanConstraints(const AllocationPlan& plan, const AllocInputs& inputs);

}  // namespace crchfl

#endif  // CRCHFL_ALLOCATOR_H_
