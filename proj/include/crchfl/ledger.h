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

#ifndef CRCHFL_LEDGER_H_
#define CRCHFL_LEDGER_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "crchfl/config.h"
#include "crchfl/units.h"

namespace crchfl {

enum class TransferKind { kDataUpload, kModelUp, kModelDown };
enum class Link { kVehicleEdge, kEdgeCloud, kVehicleCloud };
enum class Stage { kI, kII, kIII };

std::string_view TransferKindName(TransferKind kind);
std::string_view LinkName(Link link);
std::string_view StageName(Stage stage);

struct TransferEvent {
  TransferKind kind = TransferKind::kModelUp;
  Link link = Link::kVehicleEdge;
  Megabytes size;
  Stage stage = Stage::kII;
  int round = 0;

  double size_mb() const { return size.value(); }
  friend bool operator==(const TransferEvent&, const TransferEvent&) = default;
};

enum class ConsumeResult { kAccepted, kInsufficient };

// Append-only record of charged transfers. consumed() is always the sum of
// the logged event sizes and never exceeds budget().
class ThroughputLedger {
 public:
  explicit ThroughputLedger(Megabytes budget);

  // Accepted iff consumed + size <= budget. An insufficient result leaves
  // the ledger untouched. Throws std::invalid_argument for a non-positive
  // size or a data upload outside stage I.
  ConsumeResult TryConsume(const TransferEvent& event);

  bool CanAfford(Megabytes size) const { return consumed_ + size <= budget_; }

  Megabytes budget() const { return budget_; }
  Megabytes consumed() const { return consumed_; }
  Megabytes remaining() const { return budget_ - consumed_; }
  const std::vector<TransferEvent>& events() const { return events_; }

 private:
  Megabytes budget_;
  Megabytes consumed_;
  std::vector<TransferEvent> events_;
};

// Largest T with 2 * model_size * transfers * T <= u2.
std::int64_t RoundsAffordable(Megabytes u2, Megabytes model_size, int transfers_per_round);

// Number of paired (uplink + downlink) model transfers M between two
// adjacent cloud aggregations.
int TransfersPerCloudRound(const TopologySpec& topology, Mode mode, int cloud_interval);

// Cost of one cloud round, 2 * E * M.
Megabytes CloudRoundCost(const TopologySpec& topology, Mode mode, int cloud_interval,
                         Megabytes model_size);

// Downlink cost of releasing the pretrained model to every edge server and
// vehicle: one model per edge-cloud link plus one per vehicle-edge link.
Megabytes PretrainReleaseCost(const TopologySpec& topology, Megabytes model_size);

// Replays `events` through a fresh ledger; returns the consumed total.
// Throws std::runtime_error if any event is rejected.
Megabytes ReplayConsumed(std::span<const TransferEvent> events, Megabytes budget);

// Columns: index, stage, round, kind, link, size_mb, consumed_after_mb.
void WriteEventsCsv(std::ostream& out, std::span<const TransferEvent> events);

}  // namespace crchfl

#endif  // CRCHFL_LEDGER_H_
