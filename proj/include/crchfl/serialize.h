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

#ifndef CRCHFL_SERIALIZE_H_
#define CRCHFL_SERIALIZE_H_

#include <string>

#include "crchfl/allocator.h"
#include "crchfl/federation.h"

namespace crchfl {

// JSON object with u1_mb, u2_mb, pretrain_batch, edge_interval,
// cloud_interval, cloud_rounds, objective and degenerate_pair.
std::string PlanToJson(const AllocationPlan& plan, int indent = 2);
AllocationPlan PlanFromJson(const std::string& text);

// Everything in the report except the best model parameters, which are
// written separately with WriteParams. Output is a pure function of the
// report, so equal reports serialize to equal bytes.
std::string ReportToJson(const RunReport& report, int indent = 2);
// Throws std::runtime_error on malformed input.
RunReport ReportFromJson(const std::string& text);

}  // namespace crchfl

#endif  // CRCHFL_SERIALIZE_H_
