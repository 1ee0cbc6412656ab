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

#include "crchfl/ledger.h"

#include <stdexcept>
#include <string>

#include "crchfl/csv.h"

namespace crchfl {

std::string_view TransferKindName(TransferKind kind) {
  switch (kind) {
    case TransferKind::kDataUpload:
      return "DataUpload";
    case TransferKind::kModelUp:
      return "ModelUp";
    case TransferKind::kModelDown:
      return "ModelDown";
  }
  return "?";
}

std::string_view LinkName(Link link) {
  switch (link) {
    case Link::kVehicleEdge:
      return "VehicleEdge";
    case Link::kEdgeCloud:
      return "EdgeCloud";
    case Link::kVehicleCloud:
      return "VehicleCloud";
  }
  return "?";
}

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kI:
      return "I";
    case Stage::kII:
      return "II";
    case Stage::kIII:
      return "III";
  }
  return "?";
}

ThroughputLedger::ThroughputLedger(Megabytes budget) : budget_(budget) {
  if (budget < Megabytes()) throw std::invalid_argument("ledger budget must be >= 0");
}

ConsumeResult ThroughputLedger::TryConsume(const TransferEvent& event) {
  if (event.size <= Megabytes()) {
    throw std::invalid_argument("transfer size must be positive");
  }
  if (event.kind == TransferKind::kDataUpload && event.stage != Stage::kI) {
    throw std::invalid_argument("data uploads are only allowed in stage I");
  }
  if (!CanAfford(event.size)) return ConsumeResult::kInsufficient;
  consumed_ += event.size;
  events_.push_back(event);
  return ConsumeResult::kAccepted;
}

std::int64_t RoundsAffordable(Megabytes u2, Megabytes model_size, int transfers_per_round) {
  if (model_size <= Megabytes()) throw std::invalid_argument("model size must be positive");
  if (transfers_per_round < 1) throw std::invalid_argument("transfers_per_round must be >= 1");
  if (u2 <= Megabytes()) return 0;
  Megabytes per_round = model_size * (2 * static_cast<std::int64_t>(transfers_per_round));
  return u2.micros() / per_round.micros();
}

int TransfersPerCloudRound(const TopologySpec& topology, Mode mode, int cloud_interval) {
  if (cloud_interval < 1) throw std::invalid_argument("cloud_interval must be >= 1");
  int vehicles = topology.total_vehicles();
  if (mode == Mode::kSfl) return vehicles;
  return cloud_interval * vehicles + topology.num_towns;
}

Megabytes CloudRoundCost(const TopologySpec& topology, Mode mode, int cloud_interval,
                         Megabytes model_size) {
  return model_size * (2 * static_cast<std::int64_t>(
                               TransfersPerCloudRound(topology, mode, cloud_interval)));
}

Megabytes PretrainReleaseCost(const TopologySpec& topology, Megabytes model_size) {
  return model_size * static_cast<std::int64_t>(topology.total_vehicles() + topology.num_towns);
}

Megabytes ReplayConsumed(std::span<const TransferEvent> events, Megabytes budget) {
  ThroughputLedger replay(budget);
  for (const auto& e : events) {
    if (replay.TryConsume(e) != ConsumeResult::kAccepted) {
      throw std::runtime_error("event log does not replay within budget");
    }
  }
  return replay.consumed();
}

void WriteEventsCsv(std::ostream& out, std::span<const TransferEvent> events) {
  out << "index,stage,round,kind,link,size_mb,consumed_after_mb\n";
  Megabytes running;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    running += e.size;
    out << i << ',' << StageName(e.stage) << ',' << e.round << ',' << TransferKindName(e.kind)
        << ',' << LinkName(e.link) << ',' << FormatReal(e.size_mb()) << ','
        << FormatReal(running.value()) << '\n';
  }
}

}  // namespace crchfl
