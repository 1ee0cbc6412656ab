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

#ifndef CRCHFL_MODEL_H_
#define CRCHFL_MODEL_H_

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crchfl/config.h"
#include "crchfl/rng.h"

namespace crchfl {

// Layer widths of the two branches, input first. Branch I maps the
// throttle/brake features to 2 squashed outputs, branch II maps the steer
// features to 7 steer-level logits.
struct ModelDims {
  std::vector<int> branch1 = {16, 32, 16, 2};
  std::vector<int> branch2 = {48, 64, 32, 7};

  int features1() const { return branch1.front(); }
  int features2() const { return branch2.front(); }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

inline constexpr int kSteerLevels = 7;

// One tensor inside the flat parameter array. Weights are stored
// input-major: shape {fan_in, fan_out}.
struct TensorSlot {
  int branch = 1;  // 1 or 2
  int layer = 0;
  std::string tensor;  // "weight" or "bias"
  std::size_t offset = 0;
  std::size_t extent = 0;
  int rows = 0;
  int cols = 0;
  friend bool operator==(const TensorSlot&, const TensorSlot&) = default;
};

class ParamLayout {
 public:
  static ParamLayout ForDims(const ModelDims& dims);
  // Rebuilds a layout from its slots; throws std::invalid_argument on gaps
  // or overlap.
  static ParamLayout FromSlots(std::vector<TensorSlot> slots);

  const std::vector<TensorSlot>& slots() const { return slots_; }
  std::size_t size() const { return size_; }
  const TensorSlot& slot(int branch, int layer, const std::string& tensor) const;
  ModelDims dims() const;

  std::string ToJson() const;
  static ParamLayout FromJson(const std::string& text);

  friend bool operator==(const ParamLayout& a, const ParamLayout& b) {
    return a.slots_ == b.slots_;
  }

 private:
  std::vector<TensorSlot> slots_;
  std::size_t size_ = 0;
};

// Flat model parameters. Vehicle, edge, cloud and pretrained models all use
// this type.
struct ParamVector {
  std::shared_ptr<const ParamLayout> layout;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool AllFinite() const;
  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.values == b.values && (a.layout == b.layout || *a.layout == *b.layout);
  }
};

// Little-endian uint64 header length, the layout JSON, then the values as
// little-endian IEEE-754 doubles.
void WriteParams(std::ostream& out, const ParamVector& params);
ParamVector ReadParams(std::istream& in);

struct SampleBatch {
  int features1 = 0;
  int features2 = 0;
  std::vector<double> input1;          // size() x features1
  std::vector<double> input2;          // size() x features2
  std::vector<double> throttle_brake;  // size() x 2, in [0, 1]
  std::vector<int> steer_level;        // size(), in [0, 6]

  std::size_t size() const { return steer_level.size(); }
  bool empty() const { return steer_level.empty(); }
  // Throws std::invalid_argument on inconsistent sizes or labels.
  void Validate() const;
  SampleBatch Gather(std::span<const std::size_t> rows) const;
  void Append(const SampleBatch& other);
};

class TwoBranchModel {
 public:
  // Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static TwoBranchModel Initialize(const ModelDims& dims, Rng& rng);
  static TwoBranchModel Zeros(const ModelDims& dims);
  static TwoBranchModel FromParams(ParamVector params);

  const ModelDims& dims() const { return dims_; }
  const ParamVector& params() const { return params_; }
  ParamVector& params() { return params_; }

 private:
  ModelDims dims_;
  ParamVector params_;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForwardResult {
  std::vector<double> predictions;  // n x 2, in [0, 1]
  std::vector<double> logits;       // n x 7
};

ForwardResult Forward(const TwoBranchModel& model, const SampleBatch& batch);

struct LossBreakdown {
  double mse = 0.0;            // branch I, mean over all outputs
  double cross_entropy = 0.0;  // branch II, mean over samples
  double total() const { return mse + cross_entropy; }
};

struct LossAndGradient {
  LossBreakdown loss;
  std::vector<double> grad;  // same layout as the model parameters
};

LossBreakdown ComputeLoss(const TwoBranchModel& model, const SampleBatch& batch);
// Exact gradient of mse + cross_entropy. Weight decay is applied by
// AdamStep, not here.
LossAndGradient LossAndGrad(const TwoBranchModel& model, const SampleBatch& batch);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;

  static AdamState ZerosLike(const ParamVector& params);
};

inline constexpr double kAdamEpsilon = 1e-8;

// Adam with bias correction. Weight decay is added to the gradient before
// the moment updates.
void AdamStep(ParamVector& params, std::span<const double> grad, AdamState& state,
              const TrainHyper& hyper);

struct MetricsRecord {
  int round = 0;
  double consumed_mb = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

MetricsRecord Evaluate(const TwoBranchModel& model, const SampleBatch& test_set, int round,
                       double consumed_mb);

}  // namespace crchfl

#endif  // CRCHFL_MODEL_H_
