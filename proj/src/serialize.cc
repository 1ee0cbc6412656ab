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

#include "crchfl/serialize.h"

#include <stdexcept>
#include <string_view>

#include <json.hpp>

namespace crchfl {
namespace {

using nlohmann::ordered_json;

template <typename Enum, std::size_t N>
Enum EnumFromName(std::string_view name, const Enum (&values)[N],
                  std::string_view (*to_name)(Enum)) {
  for (Enum v : values) {
    if (to_name(v) == name) return v;
  }
  throw std::runtime_error("unknown enum name: " + std::string(name));
}

ordered_json PlanJson(const AllocationPlan& plan) {
  ordered_json j;
  j["u1_mb"] = plan.u1_mb();
  j["u2_mb"] = plan.u2_mb();
  j["pretrain_batch"] = plan.pretrain_batch;
  j["edge_interval"] = plan.edge_interval;
  j["cloud_interval"] = plan.cloud_interval;
  j["cloud_rounds"] = plan.cloud_rounds;
  j["objective"] = plan.objective;
  j["degenerate_pair"] = plan.degenerate_pair;
  return j;
}

AllocationPlan PlanFrom(const ordered_json& j) {
  AllocationPlan plan;
  plan.u1 = Megabytes::FromDouble(j.at("u1_mb").get<double>());
  plan.u2 = Megabytes::FromDouble(j.at("u2_mb").get<double>());
  plan.pretrain_batch = j.at("pretrain_batch").get<std::int64_t>();
  plan.edge_interval = j.at("edge_interval").get<int>();
  plan.cloud_interval = j.at("cloud_interval").get<int>();
  plan.cloud_rounds = j.at("cloud_rounds").get<std::int64_t>();
  plan.objective = j.at("objective").get<double>();
  plan.degenerate_pair = j.value("degenerate_pair", false);
  return plan;
}

ordered_json MetricsJson(const MetricsRecord& m) {
  return ordered_json{{"round", m.round},
                      {"consumed_mb", m.consumed_mb},
                      {"loss", m.loss},
                      {"accuracy", m.accuracy}};
}

MetricsRecord MetricsFrom(const ordered_json& j) {
  return MetricsRecord{j.at("round").get<int>(), j.at("consumed_mb").get<double>(),
                       j.at("loss").get<double>(), j.at("accuracy").get<double>()};
}

template <typename F>
auto Guard(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string PlanToJson(const AllocationPlan& plan, int indent) {
  return PlanJson(plan).dump(indent);
}

AllocationPlan PlanFromJson(const std::string& text) {
  return Guard([&] { return PlanFrom(ordered_json::parse(text)); });
}

std::string ReportToJson(const RunReport& report, int indent) {
  ordered_json j;
  j["mode"] = ModeName(report.mode);
  j["seed"] = report.seed;
  j["budget_mb"] = report.budget.value();
  j["plan"] = PlanJson(report.plan);
  j["completed_rounds"] = report.completed_rounds;
  j["stop_reason"] = StopReasonName(report.stop_reason);
  j["consumed_mb"] = report.consumed.value();
  j["best"] = report.best ? MetricsJson(*report.best) : ordered_json(nullptr);
  ordered_json metrics = ordered_json::array();
  for (const auto& m : report.metrics) metrics.push_back(MetricsJson(m));
  j["metrics"] = std::move(metrics);
  ordered_json events = ordered_json::array();
  for (const auto& e : report.events) {
    events.push_back(ordered_json{{"stage", StageName(e.stage)},
                                  {"round", e.round},
                                  {"kind", TransferKindName(e.kind)},
                                  {"link", LinkName(e.link)},
                                  {"size_mb", e.size_mb()}});
  }
  j["event_log"] = std::move(events);
  return j.dump(indent);
}

RunReport ReportFromJson(const std::string& text) {
  return Guard([&] {
    ordered_json j = ordered_json::parse(text);
    RunReport report;
    auto mode = ParseMode(j.at("mode").get<std::string>());
    if (!mode) throw std::runtime_error("unknown mode in report");
    report.mode = *mode;
    report.seed = j.at("seed").get<std::uint64_t>();
    report.budget = Megabytes::FromDouble(j.at("budget_mb").get<double>());
    report.plan = PlanFrom(j.at("plan"));
    report.completed_rounds = j.at("completed_rounds").get<int>();
    report.stop_reason = EnumFromName(j.at("stop_reason").get<std::string>(),
                                      {StopReason::kPlanExhausted,
                                       StopReason::kBudgetInsufficient},
                                      StopReasonName);
    report.consumed = Megabytes::FromDouble(j.at("consumed_mb").get<double>());
    if (!j.at("best").is_null()) report.best = MetricsFrom(j.at("best"));
    for (const auto& m : j.at("metrics")) report.metrics.push_back(MetricsFrom(m));
    for (const auto& e : j.at("event_log")) {
      TransferEvent event;
      event.stage = EnumFromName(e.at("stage").get<std::string>(),
                                 {Stage::kI, Stage::kII, Stage::kIII}, StageName);
      event.round = e.at("round").get<int>();
      event.kind = EnumFromName(
          e.at("kind").get<std::string>(),
          {TransferKind::kDataUpload, TransferKind::kModelUp, TransferKind::kModelDown},
          TransferKindName);
      event.link = EnumFromName(e.at("link").get<std::string>(),
                                {Link::kVehicleEdge, Link::kEdgeCloud, Link::kVehicleCloud},
                                LinkName);
      event.size = Megabytes::FromDouble(e.at("size_mb").get<double>());
      report.events.push_back(event);
    }
    return report;
  });
}

}  // namespace crchfl
