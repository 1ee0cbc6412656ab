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

#include "crchfl/units.h"

#include <cmath>
#include <stdexcept>

namespace crchfl {

Megabytes Megabytes::FromDouble(double mb) {
  if (!std::isfinite(mb)) throw std::invalid_argument("megabyte value must be finite");
  double micros = std::round(mb * static_cast<double>(kMicrosPerMb));
  if (std::abs(micros) > 9.0e18) throw std::invalid_argument("megabyte value out of range");
  return FromMicros(static_cast<std::int64_t>(micros));
}

}  // namespace crchfl
