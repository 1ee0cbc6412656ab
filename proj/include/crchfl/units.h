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

#ifndef CRCHFL_UNITS_H_
#define CRCHFL_UNITS_H_

#include <compare>
#include <cstdint>
#include <string>

namespace crchfl {

// Communication volume in megabytes, stored as an exact count of
// micro-megabytes so that ledger sums and budget comparisons carry no
// rounding error. One megabyte is 10^6 micros.
class Megabytes {
 public:
  static constexpr std::int64_t kMicrosPerMb = 1'000'000;

  constexpr Megabytes() = default;

  static constexpr Megabytes FromMicros(std::int64_t micros) {
    Megabytes m;
    m.micros_ = micros;
    return m;
  }

  // Rounds to the nearest micro-megabyte. Throws std::invalid_argument for
  // non-finite or out-of-range values.
  static Megabytes FromDouble(double mb);

  constexpr std::int64_t micros() const { return micros_; }
  double value() const { return static_cast<double>(micros_) / kMicrosPerMb; }

  constexpr Megabytes& operator+=(Megabytes o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Megabytes& operator-=(Megabytes o) {
    micros_ -= o.micros_;
    return *this;
  }
  friend constexpr Megabytes operator+(Megabytes a, Megabytes b) {
    return a += b;
  }
  friend constexpr Megabytes operator-(Megabytes a, Megabytes b) {
    return a -= b;
  }
  friend constexpr Megabytes operator*(Megabytes a, std::int64_t n) {
    return FromMicros(a.micros_ * n);
  }
  friend constexpr Megabytes operator*(std::int64_t n, Megabytes a) {
    return a * n;
  }
  friend constexpr auto operator<=>(Megabytes, Megabytes) = default;

 private:
  std::int64_t micros_ = 0;
};

}  // namespace crchfl

#endif  // CRCHFL_UNITS_H_
