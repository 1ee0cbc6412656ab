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

#include "crchfl/report.h"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "crchfl/csv.h"
#include "crchfl/ledger.h"

namespace crchfl {
namespace {

constexpr std::array<Mode, 3> kModeOrder = {Mode::kCrchfl, Mode::kHfl, Mode::kSfl};

double Share(Megabytes part, Megabytes whole) {
  return static_cast<double>(part.micros()) / static_cast<double>(whole.micros());
}

void WriteCurves(std::ostream& out, std::span<const RunReport> reports, bool by_mb) {
  out << (by_mb ? "mode,seed,consumed_mb,round,loss,accuracy\n"
                : "mode,seed,round,consumed_mb,loss,accuracy\n");
  for (const auto& report : reports) {
    for (const auto& m : report.metrics) {
      out << ModeName(report.mode) << ',' << report.seed << ',';
      if (by_mb) {
        out << FormatReal(m.consumed_mb) << ',' << m.round << ',';
      } else {
        out << m.round << ',' << FormatReal(m.consumed_mb) << ',';
      }
      out << FormatReal(m.loss) << ',' << FormatReal(m.accuracy) << '\n';
    }
  }
}

}  // namespace

const ModeSummary* ComparisonTable::Find(Mode mode) const {
  for (const auto& row : rows) {
    if (row.mode == mode) return &row;
  }
  return nullptr;
}

double ComparisonTable::DeltaPoints(Mode a, Mode b) const {
  const ModeSummary* ra = Find(a);
  const ModeSummary* rb = Find(b);
  if (ra == nullptr || rb == nullptr) throw std::out_of_range("mode missing from comparison");
  return 100.0 * (ra->best_accuracy - rb->best_accuracy);
}

double Median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

ComparisonTable Compare(std::span<const RunReport> reports) {
  if (reports.empty()) throw ReportError("no reports to compare");
  ComparisonTable table;
  table.budget = reports.front().budget;
  for (const auto& r : reports) {
    if (r.budget != table.budget) {
      throw ReportError("reports were run under different budgets");
    }
    if (!r.best) throw ReportError("report has no evaluated metrics");
  }
  for (Mode mode : kModeOrder) {
    std::vector<double> acc;
    std::vector<double> loss;
    for (const auto& r : reports) {
      if (r.mode != mode) continue;
      acc.push_back(r.best->accuracy);
      loss.push_back(r.best->loss);
    }
    if (acc.empty()) continue;
    table.rows.push_back({mode, static_cast<int>(acc.size()), Median(acc), Median(loss)});
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < table.rows.size(); ++j) {
      Mode a = table.rows[i].mode;
      Mode b = table.rows[j].mode;
      table.deltas.push_back({a, b, table.DeltaPoints(a, b)});
    }
  }
  return table;
}

void WriteComparisonCsv(std::ostream& out, const ComparisonTable& table) {
  out << "row,mode,other_mode,runs,best_accuracy,best_loss,delta_points\n";
  for (const auto& row : table.rows) {
    out << "mode," << ModeName(row.mode) << ",," << row.runs << ','
        << FormatReal(row.best_accuracy) << ',' << FormatReal(row.best_loss) << ",\n";
  }
  for (const auto& d : table.deltas) {
    out << "delta," << ModeName(d.a) << ',' << ModeName(d.b) << ",,,,"
        << FormatReal(d.points) << '\n';
  }
}

void WriteCurvesByRoundCsv(std::ostream& out, std::span<const RunReport> reports) {
  WriteCurves(out, reports, false);
}

void WriteCurvesByMbCsv(std::ostream& out, std::span<const RunReport> reports) {
  WriteCurves(out, reports, true);
}

void WriteMetricsCsv(std::ostream& out, std::span<const MetricsRecord> metrics) {
  out << "round,consumed_mb,loss,accuracy\n";
  for (const auto& m : metrics) {
    out << m.round << ',' << FormatReal(m.consumed_mb) << ',' << FormatReal(m.loss) << ','
        << FormatReal(m.accuracy) << '\n';
  }
}

CostModel CostModel::FromConfig(const RunConfig& config) {
  CostModel costs;
  costs.budget = Megabytes::FromDouble(config.budget_mb);
  costs.sample_size = Megabytes::FromDouble(config.sample_size_mb);
  costs.model_size = Megabytes::FromDouble(config.model_size_mb);
  costs.release_cost = config.charge_pretrain_release
                           ? PretrainReleaseCost(config.topology, costs.model_size)
                           : Megabytes();
  costs.topology = config.topology;
  return costs;
}

std::vector<DistributionRow> ResourceDistribution(std::span<const AllocationPlan> plans,
                                                  const CostModel& costs) {
  if (costs.budget <= Megabytes()) {
    throw std::invalid_argument("distribution needs a positive budget");
  }
  const auto& topo = costs.topology;
  std::int64_t vehicles = topo.total_vehicles();
  std::vector<DistributionRow> rows;
  for (const auto& plan : plans) {
    Megabytes data = costs.sample_size * plan.pretrain_batch;
    Megabytes release = plan.pretrain_batch > 0 ? costs.release_cost : Megabytes();
    Megabytes pair = costs.model_size * 2;
    Megabytes stage2 = pair * (plan.cloud_interval * vehicles * plan.cloud_rounds);
    Megabytes stage3 = pair * (topo.num_towns * plan.cloud_rounds);
    Megabytes used = data + release + stage2 + stage3;
    if (used > costs.budget) throw std::invalid_argument("plan exceeds the budget");

    DistributionRow row;
    row.edge_interval = plan.edge_interval;
    row.cloud_interval = plan.cloud_interval;
    row.pretrain_batch = plan.pretrain_batch;
    row.cloud_rounds = plan.cloud_rounds;
    row.stage1_share = Share(data, costs.budget);
    row.release_share = Share(release, costs.budget);
    row.stage2_share = Share(stage2, costs.budget);
    row.stage3_share = Share(stage3, costs.budget);
    row.unused_share = Share(costs.budget - used, costs.budget);
    rows.push_back(row);
  }
  return rows;
}

std::vector<AllocationPlan> EdgeIntervalAblation(const RunConfig& config) {
  std::vector<AllocationPlan> plans;
  AllocInputs base = MakeAllocInputs(config);
  for (int ie : config.candidate_edge_intervals) {
    AllocInputs inputs = base;
    inputs.candidate_edge_intervals = {ie};
    try {
      plans.push_back(SolveAllocation(inputs));
    } catch (const AllocationInfeasible&) {
    }
  }
  return plans;
}

void WriteDistributionCsv(std::ostream& out, std::span<const DistributionRow> rows) {
  out << "edge_interval,cloud_interval,pretrain_batch,cloud_rounds,stage1_share,release_share,"
         "stage2_share,stage3_share,unused_share\n";
  for (const auto& r : rows) {
    out << r.edge_interval << ',' << r.cloud_interval << ',' << r.pretrain_batch << ','
        << r.cloud_rounds << ',' << FormatReal(r.stage1_share) << ','
        << FormatReal(r.release_share) << ',' << FormatReal(r.stage2_share) << ','
        << FormatReal(r.stage3_share) << ',' << FormatReal(r.unused_share) << '\n';
  }
}

}  // namespace crchfl
