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

#ifndef CRCHFL_CONFIG_H_
#define CRCHFL_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crchfl {

enum class Mode { kCrchfl, kHfl, kSfl };

std::string_view ModeName(Mode mode);
// Accepts "crchfl", "hfl", "sfl" in any letter case.
std::optional<Mode> ParseMode(std::string_view text);

// Raised for every rejected configuration. `key()` is the fully qualified
// "section.key" name of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& constraint);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Cloud / edge / vehicle layout. Vehicles are numbered town-major: the
// vehicles of town 0 come first, then town 1, and so on.
struct TopologySpec {
  int num_towns = 0;
  std::vector<int> vehicles_per_town;
  std::vector<std::int64_t> train_sizes;  // one entry per vehicle
  std::vector<std::int64_t> test_sizes;   // one entry per town

  int total_vehicles() const;
  // Flat index of vehicle k in town n.
  int vehicle_index(int town, int vehicle) const;
  std::int64_t town_train_total(int town) const;
  std::int64_t total_train() const;

  // Throws ConfigError naming the first violated field.
  void Validate() const;

  friend bool operator==(const TopologySpec&, const TopologySpec&) = default;
};

struct TrainHyper {
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double weight_decay = 3e-3;
  int batch_size = 32;
  int pretrain_epochs = 5;

  void Validate() const;
  friend bool operator==(const TrainHyper&, const TrainHyper&) = default;
};

// Knobs of the synthetic two-town task.
struct DataHyper {
  double feature_shift = 1.0;  // distance between town input means
  double noise_scale = 0.15;   // label noise on the steer teacher

  void Validate() const;
  friend bool operator==(const DataHyper&, const DataHyper&) = default;
};

struct RunConfig {
  TopologySpec topology;

  double budget_mb = 0.0;
  double sample_size_mb = 0.5;
  double model_size_mb = 150.0;
  bool charge_pretrain_release = true;

  double alpha = 0.5;
  double gamma = 0.9;
  double d = 1.0;
  double y_scale = 1.0;
  std::vector<int> candidate_edge_intervals = {2, 3, 4};
  std::vector<int> candidate_cloud_intervals = {1};

  TrainHyper train;
  DataHyper data;

  Mode mode = Mode::kCrchfl;
  std::uint64_t seed = 0;
  // Fixed intervals used by the HFL and SFL baselines. When unset, the
  // smallest candidate of the corresponding set is used.
  std::optional<int> edge_interval;
  std::optional<int> cloud_interval;

  int baseline_edge_interval() const;
  int baseline_cloud_interval() const;

  void Validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig ParseConfig(const std::filesystem::path& path);
RunConfig ParseConfigText(const std::string& text);

// Emits every field, so ParseConfigText(SerializeConfig(c)) == c.
std::string SerializeConfig(const RunConfig& config);

}  // namespace crchfl

#endif  // CRCHFL_CONFIG_H_
