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

// Command line driver: optimize, simulate, report and dataset.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crchfl/allocator.h"
#include "crchfl/config.h"
#include "crchfl/federation.h"
#include "crchfl/ledger.h"
#include "crchfl/report.h"
#include "crchfl/serialize.h"
#include "crchfl/synth.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitRuntime = 1;

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int Optimize(const std::string& config_path, std::optional<int> edge_interval) {
  crchfl::RunConfig config = crchfl::ParseConfig(config_path);
  crchfl::AllocInputs inputs = crchfl::MakeAllocInputs(config);
  if (edge_interval) inputs.candidate_edge_intervals = {*edge_interval};
  try {
    std::cout << crchfl::PlanToJson(crchfl::SolveAllocation(inputs)) << '\n';
  } catch (const crchfl::AllocationInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  }
  return 0;
}

int Simulate(const std::string& config_path, const std::string& mode_text,
             std::optional<std::uint64_t> seed, const fs::path& out_dir, bool dry_run) {
  crchfl::RunConfig config = crchfl::ParseConfig(config_path);
  if (!mode_text.empty()) {
    auto mode = crchfl::ParseMode(mode_text);
    if (!mode) throw crchfl::ConfigError("run.mode", "must be crchfl, hfl or sfl");
    config.mode = *mode;
  }
  if (seed) config.seed = *seed;

  crchfl::RunOptions options;
  options.train = !dry_run;
  crchfl::RunReport report = crchfl::Simulate(config, options);

  fs::create_directories(out_dir);
  OpenOut(out_dir / "config.ini") << crchfl::SerializeConfig(config);
  OpenOut(out_dir / "report.json") << crchfl::ReportToJson(report) << '\n';
  {
    auto out = OpenOut(out_dir / "metrics.csv");
    crchfl::WriteMetricsCsv(out, report.metrics);
  }
  {
    auto out = OpenOut(out_dir / "events.csv");
    crchfl::WriteEventsCsv(out, report.events);
  }
  if (report.best_model) {
    auto out = OpenOut(out_dir / "best_model.bin");
    crchfl::WriteParams(out, *report.best_model);
  }
  std::cout << crchfl::ModeName(report.mode) << ": " << report.completed_rounds
            << " cloud rounds, " << report.consumed.value() << " / " << report.budget.value()
            << " MB, " << crchfl::StopReasonName(report.stop_reason);
  if (report.best) {
    std::cout << ", best accuracy " << report.best->accuracy << " at round "
              << report.best->round;
  }
  std::cout << '\n';
  return 0;
}

int Report(const std::vector<std::string>& in_dirs, const fs::path& out_dir) {
  std::vector<crchfl::RunReport> reports;
  for (const auto& dir : in_dirs) {
    reports.push_back(crchfl::ReportFromJson(ReadText(fs::path(dir) / "report.json")));
  }
  crchfl::ComparisonTable table = crchfl::Compare(reports);

  // The ablation uses the configuration of the first run directory.
  crchfl::RunConfig config = crchfl::ParseConfig(fs::path(in_dirs.front()) / "config.ini");
  auto plans = crchfl::EdgeIntervalAblation(config);
  auto rows = crchfl::ResourceDistribution(plans, crchfl::CostModel::FromConfig(config));

  fs::create_directories(out_dir);
  {
    auto out = OpenOut(out_dir / "comparison.csv");
    crchfl::WriteComparisonCsv(out, table);
  }
  {
    auto out = OpenOut(out_dir / "curves_by_round.csv");
    crchfl::WriteCurvesByRoundCsv(out, reports);
  }
  {
    auto out = OpenOut(out_dir / "curves_by_mb.csv");
    crchfl::WriteCurvesByMbCsv(out, reports);
  }
  {
    auto out = OpenOut(out_dir / "distribution.csv");
    crchfl::WriteDistributionCsv(out, rows);
  }
  for (const auto& row : table.rows) {
    std::cout << crchfl::ModeName(row.mode) << ": median best accuracy " << row.best_accuracy
              << " over " << row.runs << " runs\n";
  }
  return 0;
}

int Dataset(const std::string& config_path, const fs::path& out_dir) {
  crchfl::RunConfig config = crchfl::ParseConfig(config_path);
  crchfl::FederatedData data = crchfl::GenerateFederatedData(config);
  fs::create_directories(out_dir);
  const auto& topo = config.topology;
  for (int n = 0; n < topo.num_towns; ++n) {
    for (int k = 0; k < topo.vehicles_per_town[n]; ++k) {
      auto name = "town" + std::to_string(n) + "_vehicle" + std::to_string(k) + ".csv";
      auto out = OpenOut(out_dir / name);
      crchfl::WriteDatasetCsv(out, data.vehicle_train[topo.vehicle_index(n, k)]);
    }
  }
  auto out = OpenOut(out_dir / "test.csv");
  crchfl::WriteDatasetCsv(out, data.test_set);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical federated learning under a communication budget"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<int> edge_interval;
  auto* optimize = app.add_subcommand("optimize", "Solve the throughput allocation");
  optimize->add_option("--config", config_path, "INI configuration")->required();
  optimize->add_option("--edge-interval", edge_interval, "Restrict the edge interval")
      ->check(CLI::PositiveNumber);

  std::string mode_text;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool dry_run = false;
  auto* simulate = app.add_subcommand("simulate", "Run one federated training run");
  simulate->add_option("--config", config_path, "INI configuration")->required();
  simulate->add_option("--mode", mode_text, "Overrides run.mode")
      ->check(CLI::IsMember({"crchfl", "hfl", "sfl"}));
  simulate->add_option("--seed", seed, "Overrides run.seed");
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_flag("--dry-run", dry_run, "Ledger and message pattern only, no training");

  std::vector<std::string> in_dirs;
  auto* report = app.add_subcommand("report", "Compare finished runs");
  report->add_option("--in", in_dirs, "Run directories")->required()->expected(1, -1);
  report->add_option("--out", out_dir, "Output directory")->required();

  auto* dataset = app.add_subcommand("dataset", "Export the synthetic datasets as CSV");
  dataset->add_option("--config", config_path, "INI configuration")->required();
  dataset->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) return Optimize(config_path, edge_interval);
    if (*simulate) return Simulate(config_path, mode_text, seed, out_dir, dry_run);
    if (*report) return Report(in_dirs, out_dir);
    if (*dataset) return Dataset(config_path, out_dir);
  } catch (const crchfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
