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

#include "crchfl/synth.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crchfl/csv.h"
#include "crchfl/rng.h"

namespace crchfl {
namespace {

constexpr std::uint64_t kWorldSeed = 0x5eed'c0de'2023'0001ULL;
constexpr std::uint64_t kTestStream = 0xffff'ffffULL;

// Fixed teacher weights, identical for every town and every run.
struct Teacher {
  std::vector<double> throttle;
  std::vector<double> brake;
  std::vector<double> steer_linear;
  std::vector<double> steer_kink;

  explicit Teacher(FeatureDims dims) {
    Rng rng(DeriveSeed(kWorldSeed, {1, static_cast<std::uint64_t>(dims.features1),
                                    static_cast<std::uint64_t>(dims.features2)}));
    auto draw = [&](int n) {
      std::vector<double> w(n);
      double scale = 1.0 / std::sqrt(static_cast<double>(n));
      for (double& v : w) v = rng.Normal() * scale;
      return w;
    };
    throttle = draw(dims.features1);
    brake = draw(dims.features1);
    steer_linear = draw(dims.features2);
    steer_kink = draw(dims.features2);
  }
};

double Dot(const std::vector<double>& w, const double* x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
  return acc;
}

double Logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

SampleBatch Generate(const TownProfile& profile, std::int64_t n, Rng& rng, FeatureDims dims) {
  if (n <= 0) throw std::invalid_argument("dataset size must be positive");
  if (profile.feature_shift.size() != static_cast<std::size_t>(dims.features1 + dims.features2)) {
    throw std::invalid_argument("town profile shift does not match feature dims");
  }
  if (!(profile.noise_scale > 0.0)) throw std::invalid_argument("noise_scale must be > 0");
  const Teacher teacher(dims);

  SampleBatch batch;
  batch.features1 = dims.features1;
  batch.features2 = dims.features2;
  auto count = static_cast<std::size_t>(n);
  batch.input1.resize(count * dims.features1);
  batch.input2.resize(count * dims.features2);
  batch.throttle_brake.resize(count * 2);
  batch.steer_level.resize(count);

  for (std::size_t s = 0; s < count; ++s) {
    double* x1 = batch.input1.data() + s * dims.features1;
    double* x2 = batch.input2.data() + s * dims.features2;
    for (int i = 0; i < dims.features1; ++i) x1[i] = profile.feature_shift[i] + rng.Normal();
    for (int i = 0; i < dims.features2; ++i) {
      x2[i] = profile.feature_shift[dims.features1 + i] + rng.Normal();
    }
    double throttle = Logistic(1.5 * Dot(teacher.throttle, x1) + 0.1 * rng.Normal());
    double brake = Logistic(1.5 * Dot(teacher.brake, x1) - 1.0 + 0.1 * rng.Normal());
    batch.throttle_brake[2 * s] = throttle;
    batch.throttle_brake[2 * s + 1] = brake;

    double steer = 0.6 * Dot(teacher.steer_linear, x2) +
                   0.25 * std::abs(Dot(teacher.steer_kink, x2)) - 0.2 + profile.steer_bias +
                   profile.noise_scale * rng.Normal();
    batch.steer_level[s] = DigitizeSteer(steer);
  }
  return batch;
}

}  // namespace

TownProfile MakeTownProfile(int town_id, const DataHyper& data, FeatureDims dims) {
  TownProfile profile;
  profile.town_id = town_id;
  profile.noise_scale = data.noise_scale;
  Rng rng(DeriveSeed(kWorldSeed, {2, static_cast<std::uint64_t>(town_id)}));
  profile.feature_shift.resize(dims.features1 + dims.features2);
  for (double& v : profile.feature_shift) {
    v = (rng.Uniform() < 0.5 ? -0.5 : 0.5) * data.feature_shift;
  }
  profile.steer_bias = (town_id % 2 == 0 ? -0.1 : 0.1) * data.feature_shift;
  return profile;
}

SampleBatch GenerateVehicleDataset(const TownProfile& profile, int vehicle_index,
                                   std::int64_t n_samples, std::uint64_t seed, FeatureDims dims) {
  Rng rng(DeriveSeed(seed, {3, static_cast<std::uint64_t>(profile.town_id),
                            static_cast<std::uint64_t>(vehicle_index)}));
  return Generate(profile, n_samples, rng, dims);
}

SampleBatch GenerateTownTestSet(const TownProfile& profile, std::int64_t n_samples,
                                std::uint64_t seed, FeatureDims dims) {
  Rng rng(DeriveSeed(seed, {3, static_cast<std::uint64_t>(profile.town_id), kTestStream}));
  return Generate(profile, n_samples, rng, dims);
}

int DigitizeSteer(double steer) {
  steer = std::clamp(steer, -1.0, 1.0);
  int level = static_cast<int>(std::floor((steer + 1.0) / (2.0 / kSteerLevels)));
  return std::min(kSteerLevels - 1, level);
}

double DacSteer(int level) {
  if (level < 0 || level >= kSteerLevels) throw std::out_of_range("steer level outside [0, 6]");
  return -1.0 + (2.0 / kSteerLevels) * (level + 0.5);
}

void WriteDatasetCsv(std::ostream& out, const SampleBatch& batch) {
  for (int i = 0; i < batch.features1; ++i) out << "f1_" << i << ',';
  for (int i = 0; i < batch.features2; ++i) out << "f2_" << i << ',';
  out << "throttle,brake,steer_level\n";
  for (std::size_t s = 0; s < batch.size(); ++s) {
    for (int i = 0; i < batch.features1; ++i) {
      out << FormatReal(batch.input1[s * batch.features1 + i]) << ',';
    }
    for (int i = 0; i < batch.features2; ++i) {
      out << FormatReal(batch.input2[s * batch.features2 + i]) << ',';
    }
    out << FormatReal(batch.throttle_brake[2 * s]) << ','
        << FormatReal(batch.throttle_brake[2 * s + 1]) << ',' << batch.steer_level[s] << '\n';
  }
}

}  // namespace crchfl
