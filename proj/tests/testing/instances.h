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

#ifndef CRCHFL_TESTS_TESTING_INSTANCES_H_
#define CRCHFL_TESTS_TESTING_INSTANCES_H_

#include <random>
#include <vector>

#include "crchfl/allocator.h"

namespace crchfl::testing {

// Allocation instances small enough for the exhaustive oracle. Weights are
// coarse so exact objective ties are common.
inline AllocInputs RandomAllocInstance(std::mt19937_64& gen) {
  auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  auto real = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  };
  auto mb = [](double v) { return Megabytes::FromDouble(v); };
  AllocInputs in;
  in.topology.num_towns = integer(1, 3);
  std::int64_t size = integer(1, 60);
  for (int n = 0; n < in.topology.num_towns; ++n) {
    int k = integer(1, 3);
    in.topology.vehicles_per_town.push_back(k);
    for (int v = 0; v < k; ++v) in.topology.train_sizes.push_back(size);
    in.topology.test_sizes.push_back(1);
  }
  in.max_samples = in.topology.total_train();
  in.budget = mb(integer(0, 1000) * 0.5);
  in.sample_size = mb(integer(1, 8) * 0.25);
  in.model_size = mb(integer(1, 6) * 0.5);
  in.release_cost = integer(0, 1) ? Megabytes() : mb(integer(1, 10));
  in.alpha = integer(0, 4) * 0.25;
  in.gamma = integer(0, 4) * 0.25;
  in.d = integer(0, 3) == 0 ? 0.0 : real(0.1, 2.0);
  in.y_effective = integer(0, 3) == 0 ? static_cast<double>(integer(0, 100)) : real(0.0, 400.0);
  in.candidate_edge_intervals.clear();
  for (int i = integer(1, 4); i > 0; --i) in.candidate_edge_intervals.push_back(integer(1, 6));
  in.candidate_cloud_intervals.clear();
  for (int i = integer(1, 3); i > 0; --i) in.candidate_cloud_intervals.push_back(integer(1, 4));
  return in;
}

inline bool SamePlan(const AllocationPlan& a, const AllocationPlan& b) {
  return a.objective == b.objective && a.pretrain_batch == b.pretrain_batch &&
         a.edge_interval == b.edge_interval && a.cloud_interval == b.cloud_interval &&
         a.cloud_rounds == b.cloud_rounds && a.u1 == b.u1 && a.u2 == b.u2 &&
         a.degenerate_pair == b.degenerate_pair;
}

}  // namespace crchfl::testing

#endif  // CRCHFL_TESTS_TESTING_INSTANCES_H_
