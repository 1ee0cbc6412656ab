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

#include <gtest/gtest.h>

#include <random>

#include "crchfl/ledger.h"
#include "testing/instances.h"

namespace crchfl {
namespace {

Megabytes Mb(double v) { return Megabytes::FromDouble(v); }

TopologySpec Topology(std::vector<int> vehicles, std::int64_t size = 10) {
  TopologySpec t;
  t.num_towns = static_cast<int>(vehicles.size());
  t.vehicles_per_town = vehicles;
  for (int k : vehicles) {
    for (int v = 0; v < k; ++v) t.train_sizes.push_back(size);
  }
  t.test_sizes.assign(vehicles.size(), 1);
  return t;
}

AllocInputs SmallInstance() {
  AllocInputs in;
  in.budget = Mb(100);
  in.sample_size = Mb(1);
  in.model_size = Mb(1);
  in.alpha = 0.5;
  in.gamma = 0.9;
  in.d = 1.0;
  in.y_effective = 50.0;
  in.candidate_edge_intervals = {2, 3};
  in.candidate_cloud_intervals = {1};
  in.topology = Topology({2});
  in.max_samples = 1000;
  return in;
}

void ExpectSamePlan(const AllocationPlan& a, const AllocationPlan& b) {
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.pretrain_batch, b.pretrain_batch);
  EXPECT_EQ(a.edge_interval, b.edge_interval);
  EXPECT_EQ(a.cloud_interval, b.cloud_interval);
  EXPECT_EQ(a.cloud_rounds, b.cloud_rounds);
  EXPECT_EQ(a.u1, b.u1);
  EXPECT_EQ(a.u2, b.u2);
  EXPECT_EQ(a.degenerate_pair, b.degenerate_pair);
}

TEST(ObjectiveValueTest, Examples) {
  AllocInputs in = SmallInstance();
  in.y_effective = 100.0;
  EXPECT_EQ(ObjectiveValue(0, 1, 1, 1, in), 0.0);
  EXPECT_DOUBLE_EQ(ObjectiveValue(10, 10, 1, 1, in), 86.0);
  EXPECT_DOUBLE_EQ(ObjectiveValue(10, 2, 1, 5, in), 86.0);
  in.alpha = 1.0;
  in.gamma = 0.0;
  EXPECT_EQ(ObjectiveValue(7, 2, 1, 3, in), 7.0);
  EXPECT_THROW(ObjectiveValue(7, 2, 1, 0, in), std::invalid_argument);
}

TEST(ObjectiveValueTest, MonotoneInRounds) {
  AllocInputs in = SmallInstance();
  for (std::int64_t t = 1; t < 200; ++t) {
    EXPECT_LT(ObjectiveValue(5, 2, 1, t, in), ObjectiveValue(5, 2, 1, t + 1, in));
  }
  in.d = 0.0;
  EXPECT_EQ(ObjectiveValue(5, 2, 1, 1, in), ObjectiveValue(5, 2, 1, 9, in));
}

TEST(EffectiveSamplesTest, Examples) {
  TopologySpec two_towns;
  two_towns.num_towns = 2;
  two_towns.vehicles_per_town = {2, 3};
  two_towns.train_sizes = {2928, 2928, 2586, 2587, 1555};
  two_towns.test_sizes = {1061, 1020};
  EXPECT_EQ(EffectiveSamples(two_towns, 1.0), 12584.0);
  EXPECT_EQ(EffectiveSamples(Topology({1}, 100), 0.5), 50.0);
  EXPECT_EQ(EffectiveSamples(Topology({1}, 1), 1.0), 1.0);
  EXPECT_THROW(EffectiveSamples(two_towns, 0.0), std::invalid_argument);
}

TEST(SolveAllocationTest, SmallInstanceMatchesOracle) {
  AllocInputs in = SmallInstance();
  AllocationPlan plan = SolveAllocation(in);
  ExpectSamePlan(plan, BruteForceOracle(in));
  EXPECT_EQ(CheckPlanConstraints(plan, in), "");
  // M = 2 + 1 = 3, so one round costs 6 MB.
  EXPECT_EQ(plan.u1 + plan.u2, in.budget);
}

TEST(SolveAllocationTest, ZeroAlphaSkipsPretraining) {
  AllocInputs in = SmallInstance();
  in.alpha = 0.0;
  AllocationPlan plan = SolveAllocation(in);
  EXPECT_EQ(plan.pretrain_batch, 0);
  EXPECT_EQ(plan.u2, in.budget);
  EXPECT_EQ(plan.u1, Megabytes());
  EXPECT_EQ(plan.cloud_rounds, 16);  // floor(100 / 6)
}

TEST(SolveAllocationTest, ZeroDiscountReservesOneRound) {
  AllocInputs in = SmallInstance();
  in.d = 0.0;
  AllocationPlan plan = SolveAllocation(in);
  EXPECT_EQ(plan.cloud_rounds, 1);
  EXPECT_EQ(plan.pretrain_batch, 94);
  EXPECT_EQ(plan.u2, Mb(6));
}

TEST(SolveAllocationTest, SamplesCappedByAvailableData) {
  AllocInputs in = SmallInstance();
  in.d = 0.0;
  in.max_samples = 20;
  AllocationPlan plan = SolveAllocation(in);
  EXPECT_EQ(plan.pretrain_batch, 20);
  // The rest of the budget buys rounds: floor(80 / 6).
  EXPECT_EQ(plan.cloud_rounds, 13);
  EXPECT_EQ(CheckPlanConstraints(plan, in), "");
}

TEST(SolveAllocationTest, ReleaseCostChargedOnlyWithPretraining) {
  AllocInputs in = SmallInstance();
  in.release_cost = Mb(3);
  in.d = 0.0;
  AllocationPlan plan = SolveAllocation(in);
  EXPECT_EQ(plan.pretrain_batch, 91);
  EXPECT_EQ(plan.u1, Mb(94));
  ExpectSamePlan(plan, BruteForceOracle(in));

  in.alpha = 0.0;
  plan = SolveAllocation(in);
  EXPECT_EQ(plan.u1, Megabytes());
}

TEST(SolveAllocationTest, Infeasible) {
  AllocInputs in = SmallInstance();
  in.budget = Megabytes();
  EXPECT_THROW(SolveAllocation(in), AllocationInfeasible);
  EXPECT_THROW(BruteForceOracle(in), AllocationInfeasible);
  in.budget = Mb(5.999);
  EXPECT_THROW(SolveAllocation(in), AllocationInfeasible);
}

TEST(SolveAllocationTest, ExactlyOneRoundAffordable) {
  AllocInputs in = SmallInstance();
  in.budget = Mb(6);
  in.sample_size = Mb(1000);
  AllocationPlan plan = BruteForceOracle(in);
  EXPECT_EQ(plan.pretrain_batch, 0);
  EXPECT_EQ(plan.cloud_rounds, 1);
  ExpectSamePlan(SolveAllocation(in), plan);
}

TEST(SolveAllocationTest, DegeneratePairOnlyAsLastResort) {
  AllocInputs in = SmallInstance();
  in.candidate_edge_intervals = {1, 2};
  in.candidate_cloud_intervals = {1};
  EXPECT_FALSE(SolveAllocation(in).degenerate_pair);

  in.candidate_edge_intervals = {1};
  AllocationPlan plan = SolveAllocation(in);
  EXPECT_TRUE(plan.degenerate_pair);
  EXPECT_EQ(plan.edge_interval, 1);
  EXPECT_EQ(plan.cloud_interval, 1);
  EXPECT_EQ(CheckPlanConstraints(plan, in), "");

  in.candidate_cloud_intervals = {2};
  in.candidate_edge_intervals = {1, 2};
  EXPECT_THROW(SolveAllocation(in), AllocationInfeasible);
}

TEST(SolveAllocationTest, TieBreakPrefersMoreRoundsThenFewerSamples) {
  AllocationPlan a;
  a.objective = 1.0;
  a.cloud_rounds = 3;
  a.pretrain_batch = 10;
  AllocationPlan b = a;
  b.cloud_rounds = 2;
  EXPECT_TRUE(PlanPreferred(a, b));
  EXPECT_FALSE(PlanPreferred(b, a));
  b = a;
  b.pretrain_batch = 9;
  EXPECT_TRUE(PlanPreferred(b, a));
  b = a;
  a.edge_interval = 3;
  b.edge_interval = 2;
  EXPECT_TRUE(PlanPreferred(b, a));
  EXPECT_FALSE(PlanPreferred(a, a));
}

TEST(BruteForceOracleTest, RefusesHugeSearchSpace) {
  AllocInputs in = SmallInstance();
  in.budget = Mb(1e6);
  EXPECT_THROW(BruteForceOracle(in, 1000), SearchSpaceTooLarge);
}

TEST(SolveAllocationTest, MatchesOracleOnRandomInstances) {
  std::mt19937_64 gen(20240607);
  int compared = 0;
  int infeasible = 0;
  for (int i = 0; i < 1500; ++i) {
    AllocInputs in = testing::RandomAllocInstance(gen);
    std::optional<AllocationPlan> oracle;
    try {
      oracle = BruteForceOracle(in);
    } catch (const AllocationInfeasible&) {
      EXPECT_THROW(SolveAllocation(in), AllocationInfeasible) << "instance " << i;
      ++infeasible;
      continue;
    }
    AllocationPlan plan = SolveAllocation(in);
    SCOPED_TRACE("instance " + std::to_string(i));
    ExpectSamePlan(plan, *oracle);
    EXPECT_EQ(CheckPlanConstraints(plan, in), "");
    ++compared;
  }
  EXPECT_GE(compared, 1000);
  EXPECT_GT(infeasible, 0);
}

TEST(SolveAllocationTest, ArgmaxInvariantUnderPowerOfTwoScaling) {
  std::mt19937_64 gen(99);
  for (int i = 0; i < 300; ++i) {
    AllocInputs in = testing::RandomAllocInstance(gen);
    AllocationPlan base;
    try {
      base = SolveAllocation(in);
    } catch (const AllocationInfeasible&) {
      continue;
    }
    AllocInputs scaled = in;
    scaled.alpha *= 4.0;
    scaled.gamma *= 4.0;
    AllocationPlan p = SolveAllocation(scaled);
    EXPECT_EQ(p.pretrain_batch, base.pretrain_batch);
    EXPECT_EQ(p.edge_interval, base.edge_interval);
    EXPECT_EQ(p.cloud_interval, base.cloud_interval);
    EXPECT_EQ(p.cloud_rounds, base.cloud_rounds);
    EXPECT_EQ(p.objective, 4.0 * base.objective);

    scaled = in;
    scaled.alpha *= 0.5;
    scaled.y_effective *= 0.5;
    p = SolveAllocation(scaled);
    EXPECT_EQ(p.pretrain_batch, base.pretrain_batch);
    EXPECT_EQ(p.cloud_rounds, base.cloud_rounds);
    EXPECT_EQ(p.edge_interval, base.edge_interval);
  }
}

TEST(SolveAllocationTest, LargerEdgeIntervalSetNeverHurts) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 300; ++i) {
    AllocInputs in = testing::RandomAllocInstance(gen);
    in.candidate_cloud_intervals = {1};
    in.candidate_edge_intervals = {2, 3};
    AllocInputs wider = in;
    wider.candidate_edge_intervals.push_back(6);
    double narrow_best;
    try {
      narrow_best = SolveAllocation(in).objective;
    } catch (const AllocationInfeasible&) {
      continue;
    }
    EXPECT_GE(SolveAllocation(wider).objective, narrow_best);
  }
}

TEST(SolveAllocationTest, FullScaleConfigIsFeasible) {
  AllocInputs in;
  in.topology.num_towns = 2;
  in.topology.vehicles_per_town = {2, 3};
  in.topology.train_sizes = {2928, 2928, 2586, 2587, 1555};
  in.topology.test_sizes = {1061, 1020};
  in.budget = Mb(20480);
  in.sample_size = Mb(0.5);
  in.model_size = Mb(150);
  in.release_cost = PretrainReleaseCost(in.topology, in.model_size);
  in.y_effective = 12584;
  in.candidate_edge_intervals = {2, 3, 4};
  in.candidate_cloud_intervals = {1};
  in.max_samples = 12584;
  AllocationPlan plan = SolveAllocation(in);
  EXPECT_EQ(CheckPlanConstraints(plan, in), "");
  EXPECT_GE(plan.cloud_rounds, 1);
  EXPECT_EQ(plan.edge_interval, 4);
}

}  // namespace
}  // namespace crchfl
