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

#ifndef CRCHFL_CSV_H_
#define CRCHFL_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace crchfl {

// 17 significant digits, enough to round-trip any double.
std::string FormatReal(double value);

// Splits one CSV line on commas. No quoting support; none of our files
// emit quoted fields.
std::vector<std::string> SplitCsvLine(std::string_view line);

// Reads a header + rows file. Throws std::runtime_error on unreadable input
// or ragged rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable ReadCsv(const std::string& text);

}  // namespace crchfl

#endif  // CRCHFL_CSV_H_
