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

#include "crchfl/model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

namespace crchfl {
namespace {

SampleBatch RandomBatch(std::size_t n, Rng& rng, const ModelDims& dims = {}) {
  SampleBatch b;
  b.features1 = dims.features1();
  b.features2 = dims.features2();
  for (std::size_t i = 0; i < n * b.features1; ++i) b.input1.push_back(rng.Normal());
  for (std::size_t i = 0; i < n * b.features2; ++i) b.input2.push_back(rng.Normal());
  for (std::size_t i = 0; i < n * 2; ++i) b.throttle_brake.push_back(rng.Uniform());
  for (std::size_t i = 0; i < n; ++i) {
    b.steer_level.push_back(static_cast<int>(rng.UniformInt(kSteerLevels)));
  }
  return b;
}

TrainHyper NoDecay(double lr) {
  TrainHyper h;
  h.learning_rate = lr;
  h.weight_decay = 0.0;
  return h;
}

TEST(ForwardTest, ZeroModelIsConstant) {
  Rng rng(1);
  SampleBatch batch = RandomBatch(5, rng);
  ForwardResult out = Forward(TwoBranchModel::Zeros(ModelDims{}), batch);
  ASSERT_EQ(out.predictions.size(), 10u);
  ASSERT_EQ(out.logits.size(), 35u);
  for (double p : out.predictions) EXPECT_EQ(p, 0.5);
  for (double z : out.logits) EXPECT_EQ(z, 0.0);
}

TEST(ForwardTest, HandComputedSingleHiddenUnit) {
  ModelDims dims{{1, 1, 2}, {1, 1, 7}};
  TwoBranchModel model = TwoBranchModel::Zeros(dims);
  const ParamLayout& layout = *model.params().layout;
  auto set = [&](int branch, int layer, const char* tensor, std::vector<double> v) {
    const TensorSlot& s = layout.slot(branch, layer, tensor);
    ASSERT_EQ(s.extent, v.size());
    std::copy(v.begin(), v.end(), model.params().values.begin() + s.offset);
  };
  set(1, 0, "weight", {0.5});
  set(1, 0, "bias", {-0.25});
  set(1, 1, "weight", {2.0, -1.0});
  set(1, 1, "bias", {0.1, 0.2});
  set(2, 0, "weight", {-1.5});
  set(2, 0, "bias", {0.3});
  set(2, 1, "weight", {1, 2, 3, 4, 5, 6, 7});
  set(2, 1, "bias", {0, 0, 0, 0, 0, 0, 1});

  SampleBatch batch;
  batch.features1 = 1;
  batch.features2 = 1;
  batch.input1 = {0.8};
  batch.input2 = {-0.4};
  batch.throttle_brake = {0.5, 0.5};
  batch.steer_level = {3};
  ForwardResult out = Forward(model, batch);

  double h1 = std::tanh(0.5 * 0.8 - 0.25);
  EXPECT_NEAR(out.predictions[0], 1.0 / (1.0 + std::exp(-(2.0 * h1 + 0.1))), 1e-12);
  EXPECT_NEAR(out.predictions[1], 1.0 / (1.0 + std::exp(-(-1.0 * h1 + 0.2))), 1e-12);
  double h2 = std::tanh(-1.5 * -0.4 + 0.3);
  for (int c = 0; c < 7; ++c) {
    EXPECT_NEAR(out.logits[c], (c + 1) * h2 + (c == 6 ? 1.0 : 0.0), 1e-12) << c;
  }
}

TEST(ForwardTest, BatchEqualsRowWise) {
  Rng rng(2);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  SampleBatch batch = RandomBatch(6, rng);
  ForwardResult all = Forward(model, batch);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    std::size_t row = s;
    ForwardResult one = Forward(model, batch.Gather({&row, 1}));
    for (int j = 0; j < 2; ++j) EXPECT_EQ(one.predictions[j], all.predictions[2 * s + j]);
    for (int c = 0; c < 7; ++c) EXPECT_EQ(one.logits[c], all.logits[7 * s + c]);
  }
}

TEST(ForwardTest, DimensionMismatch) {
  Rng rng(3);
  SampleBatch batch = RandomBatch(2, rng, ModelDims{{8, 4, 2}, {48, 7}});
  EXPECT_THROW(Forward(TwoBranchModel::Zeros(ModelDims{}), batch), std::invalid_argument);
}

TEST(ForwardTest, NonFiniteNamesTheLayer) {
  Rng rng(4);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  const TensorSlot& s = model.params().layout->slot(2, 1, "bias");
  model.params().values[s.offset] = std::numeric_limits<double>::quiet_NaN();
  try {
    Forward(model, RandomBatch(2, rng));
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("branch 2 layer 1"), std::string::npos) << e.what();
  }
}

TEST(LossTest, UniformLogitsGiveLogSeven) {
  Rng rng(5);
  SampleBatch batch = RandomBatch(9, rng);
  LossBreakdown loss = ComputeLoss(TwoBranchModel::Zeros(ModelDims{}), batch);
  EXPECT_NEAR(loss.cross_entropy, std::log(7.0), 1e-12);
  EXPECT_NEAR(std::log(7.0), 1.9459, 1e-4);
}

TEST(LossTest, PerfectPredictionsApproachZero) {
  ModelDims dims{{1, 2}, {1, 7}};
  TwoBranchModel model = TwoBranchModel::Zeros(dims);
  const ParamLayout& layout = *model.params().layout;
  SampleBatch batch;
  batch.features1 = 1;
  batch.features2 = 1;
  batch.input1 = {0.0};
  batch.input2 = {0.0};
  batch.throttle_brake = {0.5, 0.5};
  batch.steer_level = {4};
  double previous = std::numeric_limits<double>::infinity();
  for (double margin : {1.0, 5.0, 20.0}) {
    model.params().values[layout.slot(2, 0, "bias").offset + 4] = margin;
    LossBreakdown loss = ComputeLoss(model, batch);
    EXPECT_EQ(loss.mse, 0.0);
    EXPECT_GT(loss.cross_entropy, 0.0);
    EXPECT_LT(loss.cross_entropy, previous);
    previous = loss.cross_entropy;
  }
  EXPECT_LT(previous, 1e-7);
}

TEST(LossAndGradTest, MatchesCentralDifferences) {
  Rng rng(6);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  SampleBatch batch = RandomBatch(8, rng);
  LossAndGradient lg = LossAndGrad(model, batch);
  EXPECT_EQ(lg.loss.total(), ComputeLoss(model, batch).total());

  const double h = 1e-5;
  for (const TensorSlot& slot : model.params().layout->slots()) {
    int checked = 0;
    double worst = 0.0;
    for (int k = 0; k < 24; ++k) {
      std::size_t i = slot.offset + rng.UniformInt(slot.extent);
      TwoBranchModel plus = model;
      TwoBranchModel minus = model;
      plus.params().values[i] += h;
      minus.params().values[i] -= h;
      double fd = (ComputeLoss(plus, batch).total() - ComputeLoss(minus, batch).total()) / (2 * h);
      double bp = lg.grad[i];
      double scale = std::max({std::abs(fd), std::abs(bp), 1e-6});
      worst = std::max(worst, std::abs(fd - bp) / scale);
      ++checked;
    }
    EXPECT_GE(checked, 20);
    EXPECT_LT(worst, 1e-4) << "branch " << slot.branch << " layer " << slot.layer << " "
                           << slot.tensor;
  }
}

TEST(AdamStepTest, FirstStepHandCalculation) {
  ModelDims dims{{1, 2}, {1, 7}};
  TwoBranchModel model = TwoBranchModel::Zeros(dims);
  AdamState state = AdamState::ZerosLike(model.params());
  std::vector<double> grad(model.params().size(), 0.0);
  grad[0] = 1.0;
  grad[1] = -2.0;
  AdamStep(model.params(), grad, state, NoDecay(1e-4));
  // m_hat = g and v_hat = g^2 after one step, so the update is
  // -lr * g / (|g| + eps).
  EXPECT_NEAR(model.params().values[0], -1e-4 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(model.params().values[1], 1e-4 * 2.0 / (2.0 + 1e-8), 1e-18);
  EXPECT_EQ(model.params().values[2], 0.0);
  EXPECT_EQ(state.step_count, 1);
  EXPECT_NEAR(state.first_moment[0], 0.1, 1e-15);
  EXPECT_NEAR(state.second_moment[0], 0.001, 1e-15);
}

TEST(AdamStepTest, ZeroGradientIsFixedPoint) {
  Rng rng(7);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  AdamState state = AdamState::ZerosLike(model.params());
  std::vector<double> g(model.params().size());
  for (double& v : g) v = rng.Normal();
  AdamStep(model.params(), g, state, NoDecay(1e-3));
  ParamVector before = model.params();
  AdamState moments = state;
  std::vector<double> zero(g.size(), 0.0);
  // Momentum keeps moving the parameters; only the moments are checked.
  AdamStep(model.params(), zero, state, NoDecay(1e-3));
  for (std::size_t i = 0; i < zero.size(); ++i) {
    EXPECT_EQ(state.first_moment[i], 0.9 * moments.first_moment[i]);
    EXPECT_LE(state.second_moment[i], moments.second_moment[i]);
  }

  TwoBranchModel fresh = TwoBranchModel::Initialize(ModelDims{}, rng);
  ParamVector start = fresh.params();
  AdamState fresh_state = AdamState::ZerosLike(start);
  AdamStep(fresh.params(), zero, fresh_state, NoDecay(1e-3));
  EXPECT_EQ(fresh.params(), start);
}

TEST(AdamStepTest, WeightDecayAddsToGradient) {
  ModelDims dims{{1, 2}, {1, 7}};
  TwoBranchModel a = TwoBranchModel::Zeros(dims);
  a.params().values[0] = 2.0;
  TwoBranchModel b = a;
  AdamState sa = AdamState::ZerosLike(a.params());
  AdamState sb = sa;
  TrainHyper decay = NoDecay(1e-2);
  decay.weight_decay = 0.5;
  std::vector<double> zero(a.params().size(), 0.0);
  std::vector<double> explicit_grad = zero;
  explicit_grad[0] = 0.5 * 2.0;
  AdamStep(a.params(), zero, sa, decay);
  AdamStep(b.params(), explicit_grad, sb, NoDecay(1e-2));
  EXPECT_EQ(a.params(), b.params());
}

TEST(AdamStepTest, Deterministic) {
  Rng rng(8);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  SampleBatch batch = RandomBatch(16, rng);
  auto run = [&] {
    TwoBranchModel m = model;
    AdamState s = AdamState::ZerosLike(m.params());
    for (int i = 0; i < 5; ++i) AdamStep(m.params(), LossAndGrad(m, batch).grad, s, TrainHyper{});
    return m.params();
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamStepTest, ShapeMismatch) {
  TwoBranchModel model = TwoBranchModel::Zeros(ModelDims{});
  AdamState state = AdamState::ZerosLike(model.params());
  std::vector<double> short_grad(3, 0.0);
  EXPECT_THROW(AdamStep(model.params(), short_grad, state, TrainHyper{}), std::invalid_argument);
}

TEST(TrainingTest, SingleBatchSmokeConvergence) {
  Rng rng(9);
  SampleBatch batch = RandomBatch(64, rng);
  // Linearly separable labels: throttle/brake and steer are functions of
  // the sign of one input coordinate.
  for (std::size_t s = 0; s < batch.size(); ++s) {
    bool positive = batch.input1[s * batch.features1] > 0.0;
    batch.throttle_brake[2 * s] = positive ? 0.9 : 0.1;
    batch.throttle_brake[2 * s + 1] = positive ? 0.1 : 0.9;
    batch.steer_level[s] = batch.input2[s * batch.features2] > 0.0 ? 5 : 1;
  }
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  AdamState state = AdamState::ZerosLike(model.params());
  TrainHyper hyper;
  hyper.learning_rate = 1e-3;
  double initial = ComputeLoss(model, batch).total();
  for (int step = 0; step < 200; ++step) {
    AdamStep(model.params(), LossAndGrad(model, batch).grad, state, hyper);
  }
  double final_loss = ComputeLoss(model, batch).total();
  EXPECT_LE(final_loss, 0.5 * initial) << initial << " -> " << final_loss;
}

TEST(EvaluateTest, PerfectClassifier) {
  ModelDims dims{{1, 2}, {1, 7}};
  TwoBranchModel model = TwoBranchModel::Zeros(dims);
  const ParamLayout& layout = *model.params().layout;
  // Logit c = c * x - c^2 / 2 peaks at c = x for integer inputs.
  for (int c = 0; c < 7; ++c) {
    model.params().values[layout.slot(2, 0, "weight").offset + c] = c;
    model.params().values[layout.slot(2, 0, "bias").offset + c] = -0.5 * c * c;
  }
  SampleBatch batch;
  batch.features1 = 1;
  batch.features2 = 1;
  for (int c = 0; c < 7; ++c) {
    batch.input1.push_back(0.0);
    batch.input2.push_back(c);
    batch.throttle_brake.insert(batch.throttle_brake.end(), {0.5, 0.5});
    batch.steer_level.push_back(c);
  }
  MetricsRecord m = Evaluate(model, batch, 3, 12.5);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.round, 3);
  EXPECT_EQ(m.consumed_mb, 12.5);
}

TEST(EvaluateTest, ConstantLogitsScoreOneSeventh) {
  Rng rng(10);
  const std::size_t n = 7000;
  SampleBatch batch = RandomBatch(n, rng);
  MetricsRecord m = Evaluate(TwoBranchModel::Zeros(ModelDims{}), batch, 0, 0.0);
  double p = 1.0 / 7.0;
  double sigma = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(m.accuracy, p, 3 * sigma);
}

TEST(EvaluateTest, LossMatchesTrainingPath) {
  Rng rng(11);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  SampleBatch batch = RandomBatch(50, rng);
  EXPECT_EQ(Evaluate(model, batch, 0, 0.0).loss, LossAndGrad(model, batch).loss.total());
  EXPECT_THROW(Evaluate(model, SampleBatch{}, 0, 0.0), std::invalid_argument);
}

TEST(ParamLayoutTest, SlotsTileTheVector) {
  ParamLayout layout = ParamLayout::ForDims(ModelDims{});
  std::size_t expected = (16 * 32 + 32) + (32 * 16 + 16) + (16 * 2 + 2) + (48 * 64 + 64) +
                         (64 * 32 + 32) + (32 * 7 + 7);
  EXPECT_EQ(layout.size(), expected);
  EXPECT_EQ(layout.dims(), ModelDims{});
  EXPECT_EQ(ParamLayout::FromJson(layout.ToJson()), layout);

  auto slots = layout.slots();
  slots[3].offset += 1;
  EXPECT_THROW(ParamLayout::FromSlots(slots), std::invalid_argument);
}

TEST(ParamVectorTest, BinaryRoundTrip) {
  Rng rng(12);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  std::stringstream buf;
  WriteParams(buf, model.params());
  std::string bytes = buf.str();
  // Header length, then the JSON header, then 8 bytes per value.
  std::uint64_t header = 0;
  for (int i = 7; i >= 0; --i) header = (header << 8) | static_cast<unsigned char>(bytes[i]);
  EXPECT_EQ(bytes.size(), 8 + header + 8 * model.params().size());
  ParamVector back = ReadParams(buf);
  EXPECT_EQ(back, model.params());
  EXPECT_NO_THROW(TwoBranchModel::FromParams(back));

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(ReadParams(truncated), std::runtime_error);
}

TEST(InitializeTest, WithinFanInBound) {
  Rng rng(13);
  TwoBranchModel model = TwoBranchModel::Initialize(ModelDims{}, rng);
  const ParamLayout& layout = *model.params().layout;
  for (const TensorSlot& s : layout.slots()) {
    int fan_in = layout.slot(s.branch, s.layer, "weight").rows;
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = s.offset; i < s.offset + s.extent; ++i) {
      EXPECT_LE(std::abs(model.params().values[i]), bound);
    }
  }
  Rng a(14);
  Rng b(14);
  EXPECT_EQ(TwoBranchModel::Initialize(ModelDims{}, a).params(),
            TwoBranchModel::Initialize(ModelDims{}, b).params());
}

TEST(SampleBatchTest, ValidateRejectsBadLabels) {
  Rng rng(15);
  SampleBatch batch = RandomBatch(3, rng);
  EXPECT_NO_THROW(batch.Validate());
  batch.steer_level[1] = 7;
  EXPECT_THROW(batch.Validate(), std::invalid_argument);
  batch.steer_level[1] = 0;
  batch.input2.pop_back();
  EXPECT_THROW(batch.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace crchfl
