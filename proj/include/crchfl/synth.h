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

#ifndef CRCHFL_SYNTH_H_
#define CRCHFL_SYNTH_H_

#include <cstdint>
#include <ostream>
#include <vector>

#include "crchfl/config.h"
#include "crchfl/model.h"

namespace crchfl {

// Input distribution of one town. Features are N(feature_shift, 1) per
// coordinate; the shift is what makes towns differ.
struct TownProfile {
  int town_id = 0;
  std::vector<double> feature_shift;  // features1 then features2
  double steer_bias = 0.0;
  double noise_scale = 0.15;
};

struct FeatureDims {
  int features1 = 16;
  int features2 = 48;
};

TownProfile MakeTownProfile(int town_id, const DataHyper& data, FeatureDims dims = {});

// Pure function of its arguments. Labels come from a fixed teacher shared
// by all towns: throttle and brake are logistic in the branch-I features,
// steer is piecewise linear in the branch-II features plus Gaussian noise,
// then digitized.
SampleBatch GenerateVehicleDataset(const TownProfile& profile, int vehicle_index,
                                   std::int64_t n_samples, std::uint64_t seed,
                                   FeatureDims dims = {});

// Held-out samples of one town, drawn from a stream no vehicle uses.
SampleBatch GenerateTownTestSet(const TownProfile& profile, std::int64_t n_samples,
                                std::uint64_t seed, FeatureDims dims = {});

// Seven uniform bins over [-1, 1]; inputs outside are clamped.
int DigitizeSteer(double steer);
// Bin center of `level`. Throws std::out_of_range outside [0, 6].
double DacSteer(int level);

// One row per sample: features..., throttle, brake, steer_level.
void WriteDatasetCsv(std::ostream& out, const SampleBatch& batch);

}  // namespace crchfl

#endif  // CRCHFL_SYNTH_H_
