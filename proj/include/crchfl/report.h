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

#ifndef CRCHFL_REPORT_H_
#define CRCHFL_REPORT_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crchfl/allocator.h"
#include "crchfl/config.h"
#include "crchfl/federation.h"
#include "crchfl/units.h"

namespace crchfl {

struct ModeSummary {
  Mode mode = Mode::kCrchfl;
  int runs = 0;
  // Medians over runs of each run's best snapshot.
  double best_accuracy = 0.0;
  double best_loss = 0.0;
};

// Accuracy difference in percentage points: 100 * (acc(a) - acc(b)).
struct AccuracyDelta {
  Mode a = Mode::kCrchfl;
  Mode b = Mode::kHfl;
  double points = 0.0;
};

struct ComparisonTable {
  Megabytes budget;
  std::vector<ModeSummary> rows;      // ordered crchfl, hfl, sfl
  std::vector<AccuracyDelta> deltas;  // one per unordered pair, a before b

  const ModeSummary* Find(Mode mode) const;
  // Throws std::out_of_range when either mode is absent.
  double DeltaPoints(Mode a, Mode b) const;
};

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ReportError for an empty input, mismatched budgets, or a report
// that was never evaluated.
ComparisonTable Compare(std::span<const RunReport> reports);

double Median(std::vector<double> values);

// Header: row,mode,other_mode,runs,best_accuracy,best_loss,delta_points.
void WriteComparisonCsv(std::ostream& out, const ComparisonTable& table);

// One row per MetricsRecord of every report, in input order.
// Header: mode,seed,round,consumed_mb,loss,accuracy.
void WriteCurvesByRoundCsv(std::ostream& out, std::span<const RunReport> reports);
// Same rows, columns led by consumed throughput.
// Header: mode,seed,consumed_mb,round,loss,accuracy.
void WriteCurvesByMbCsv(std::ostream& out, std::span<const RunReport> reports);
// Header: round,consumed_mb,loss,accuracy.
void WriteMetricsCsv(std::ostream& out, std::span<const MetricsRecord> metrics);

// What a plan's budget split depends on besides the plan itself.
struct CostModel {
  Megabytes budget;
  Megabytes sample_size;
  Megabytes model_size;
  Megabytes release_cost;
  TopologySpec topology;

  static CostModel FromConfig(const RunConfig& config);
};

struct DistributionRow {
  int edge_interval = 0;
  int cloud_interval = 0;
  std::int64_t pretrain_batch = 0;
  std::int64_t cloud_rounds = 0;
  double stage1_share = 0.0;   // x * D / U
  double release_share = 0.0;  // pretrained model release, stage I
  double stage2_share = 0.0;   // vehicle-edge pairs
  double stage3_share = 0.0;   // edge-cloud pairs
  double unused_share = 0.0;
};

std::vector<DistributionRow> ResourceDistribution(std::span<const AllocationPlan> plans,
                                                  const CostModel& costs);

// Solves the allocation once per candidate edge interval, each time with
// that interval as the only choice. Intervals with no feasible plan are
// skipped.
std::vector<AllocationPlan> EdgeIntervalAblation(const RunConfig& config);

// Header: edge_interval,cloud_interval,pretrain_batch,cloud_rounds,
// stage1_share,release_share,stage2_share,stage3_share,unused_share.
void WriteDistributionCsv(std::ostream& out, std::span<const DistributionRow> rows);

}  // namespace crchfl

#endif  // CRCHFL_REPORT_H_
