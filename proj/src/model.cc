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

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace crchfl {
namespace {

using json = nlohmann::json;

const std::vector<int>& Widths(const ModelDims& dims, int branch) {
  return branch == 1 ? dims.branch1 : dims.branch2;
}

// Post-activation outputs of every layer of one branch; acts[0] is the
// branch input.
struct BranchTrace {
  std::vector<std::vector<double>> acts;
};

struct Traces {
  BranchTrace branch1;
  BranchTrace branch2;
  std::size_t n = 0;
};

void CheckFinite(std::span<const double> values, int branch, int layer) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NonFiniteError("non-finite activation in branch " + std::to_string(branch) +
                           " layer " + std::to_string(layer));
    }
  }
}

// y = x W + b for every row of x.
void Dense(std::span<const double> x, std::size_t n, int in_w, int out_w, const double* weight,
           const double* bias, std::vector<double>& y) {
  y.assign(n * out_w, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    double* row = y.data() + s * out_w;
    const double* xs = x.data() + s * in_w;
    std::copy(bias, bias + out_w, row);
    for (int i = 0; i < in_w; ++i) {
      const double a = xs[i];
      const double* w = weight + static_cast<std::size_t>(i) * out_w;
      for (int o = 0; o < out_w; ++o) row[o] += a * w[o];
    }
  }
}

BranchTrace ForwardBranch(const ParamVector& params, const ModelDims& dims, int branch,
                          std::span<const double> input, std::size_t n) {
  const auto& widths = Widths(dims, branch);
  const ParamLayout& layout = *params.layout;
  int layers = static_cast<int>(widths.size()) - 1;
  BranchTrace trace;
  trace.acts.resize(layers + 1);
  trace.acts[0].assign(input.begin(), input.end());
  for (int l = 0; l < layers; ++l) {
    const auto& w = layout.slot(branch, l, "weight");
    const auto& b = layout.slot(branch, l, "bias");
    auto& out = trace.acts[l + 1];
    Dense(trace.acts[l], n, widths[l], widths[l + 1], params.values.data() + w.offset,
          params.values.data() + b.offset, out);
    bool last = l == layers - 1;
    if (!last) {
      for (double& v : out) v = std::tanh(v);
    } else if (branch == 1) {
      for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
    }
    CheckFinite(out, branch, l);
  }
  return trace;
}

Traces RunForward(const TwoBranchModel& model, const SampleBatch& batch) {
  const ModelDims& dims = model.dims();
  if (batch.features1 != dims.features1() || batch.features2 != dims.features2()) {
    throw std::invalid_argument("batch feature dimensions do not match the model");
  }
  batch.Validate();
  Traces t;
  t.n = batch.size();
  t.branch1 = ForwardBranch(model.params(), dims, 1, batch.input1, t.n);
  t.branch2 = ForwardBranch(model.params(), dims, 2, batch.input2, t.n);
  return t;
}

LossBreakdown LossFromOutputs(std::span<const double> predictions, std::span<const double> logits,
                              const SampleBatch& batch) {
  std::size_t n = batch.size();
  double sq = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double diff = predictions[i] - batch.throttle_brake[i];
    sq += diff * diff;
  }
  double ce = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double* z = logits.data() + s * kSteerLevels;
    double top = *std::max_element(z, z + kSteerLevels);
    double sum = 0.0;
    for (int c = 0; c < kSteerLevels; ++c) sum += std::exp(z[c] - top);
    ce += top + std::log(sum) - z[batch.steer_level[s]];
  }
  LossBreakdown loss;
  loss.mse = sq / static_cast<double>(n * 2);
  loss.cross_entropy = ce / static_cast<double>(n);
  return loss;
}

// Backpropagates `delta` (gradient w.r.t. the pre-activation of the last
// layer) through one branch, accumulating into grad.
void BackwardBranch(const ParamVector& params, const ModelDims& dims, int branch,
                    const BranchTrace& trace, std::size_t n, std::vector<double> delta,
                    std::vector<double>& grad) {
  const auto& widths = Widths(dims, branch);
  const ParamLayout& layout = *params.layout;
  int layers = static_cast<int>(widths.size()) - 1;
  std::vector<double> prev;
  for (int l = layers - 1; l >= 0; --l) {
    int in_w = widths[l];
    int out_w = widths[l + 1];
    const auto& ws = layout.slot(branch, l, "weight");
    const auto& bs = layout.slot(branch, l, "bias");
    double* dw = grad.data() + ws.offset;
    double* db = grad.data() + bs.offset;
    const double* w = params.values.data() + ws.offset;
    const auto& input = trace.acts[l];
    for (std::size_t s = 0; s < n; ++s) {
      const double* d = delta.data() + s * out_w;
      const double* a = input.data() + s * in_w;
      for (int o = 0; o < out_w; ++o) db[o] += d[o];
      for (int i = 0; i < in_w; ++i) {
        const double ai = a[i];
        double* row = dw + static_cast<std::size_t>(i) * out_w;
        for (int o = 0; o < out_w; ++o) row[o] += ai * d[o];
      }
    }
    if (l == 0) break;
    prev.assign(n * in_w, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const double* d = delta.data() + s * out_w;
      const double* a = input.data() + s * in_w;
      double* p = prev.data() + s * in_w;
      for (int i = 0; i < in_w; ++i) {
        const double* wr = w + static_cast<std::size_t>(i) * out_w;
        double acc = 0.0;
        for (int o = 0; o < out_w; ++o) acc += wr[o] * d[o];
        p[i] = acc * (1.0 - a[i] * a[i]);  // tanh'
      }
    }
    delta.swap(prev);
  }
}

void PutLe64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t GetLe64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw std::runtime_error("truncated parameter file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

ParamLayout ParamLayout::ForDims(const ModelDims& dims) {
  std::vector<TensorSlot> slots;
  std::size_t offset = 0;
  for (int branch : {1, 2}) {
    const auto& widths = Widths(dims, branch);
    if (widths.size() < 2) throw std::invalid_argument("a branch needs at least one layer");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      if (widths[l] < 1 || widths[l + 1] < 1) {
        throw std::invalid_argument("layer widths must be positive");
      }
      std::size_t w_extent = static_cast<std::size_t>(widths[l]) * widths[l + 1];
      slots.push_back({branch, static_cast<int>(l), "weight", offset, w_extent, widths[l],
                       widths[l + 1]});
      offset += w_extent;
      slots.push_back({branch, static_cast<int>(l), "bias", offset,
                       static_cast<std::size_t>(widths[l + 1]), 1, widths[l + 1]});
      offset += widths[l + 1];
    }
  }
  if (dims.branch1.back() != 2) throw std::invalid_argument("branch I must output 2 values");
  if (dims.branch2.back() != kSteerLevels) {
    throw std::invalid_argument("branch II must output 7 logits");
  }
  return FromSlots(std::move(slots));
}

ParamLayout ParamLayout::FromSlots(std::vector<TensorSlot> slots) {
  std::vector<const TensorSlot*> order;
  for (const auto& s : slots) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const TensorSlot* a, const TensorSlot* b) { return a->offset < b->offset; });
  std::size_t expected = 0;
  for (const TensorSlot* s : order) {
    if (s->offset != expected) throw std::invalid_argument("layout has a gap or overlap");
    if (s->extent != static_cast<std::size_t>(s->rows) * s->cols || s->extent == 0) {
      throw std::invalid_argument("slot extent does not match its shape");
    }
    expected += s->extent;
  }
  ParamLayout layout;
  layout.slots_ = std::move(slots);
  layout.size_ = expected;
  return layout;
}

const TensorSlot& ParamLayout::slot(int branch, int layer, const std::string& tensor) const {
  for (const auto& s : slots_) {
    if (s.branch == branch && s.layer == layer && s.tensor == tensor) return s;
  }
  throw std::out_of_range("no tensor slot for branch " + std::to_string(branch) + " layer " +
                          std::to_string(layer) + " " + tensor);
}

ModelDims ParamLayout::dims() const {
  ModelDims dims;
  for (int branch : {1, 2}) {
    std::vector<int> widths;
    for (int l = 0;; ++l) {
      auto it = std::find_if(slots_.begin(), slots_.end(), [&](const TensorSlot& s) {
        return s.branch == branch && s.layer == l && s.tensor == "weight";
      });
      if (it == slots_.end()) break;
      if (widths.empty()) widths.push_back(it->rows);
      widths.push_back(it->cols);
    }
    (branch == 1 ? dims.branch1 : dims.branch2) = widths;
  }
  return dims;
}

std::string ParamLayout::ToJson() const {
  json tensors = json::array();
  for (const auto& s : slots_) {
    tensors.push_back({{"branch", s.branch},
                       {"layer", s.layer},
                       {"tensor", s.tensor},
                       {"offset", s.offset},
                       {"extent", s.extent},
                       {"shape", {s.rows, s.cols}}});
  }
  return json{{"size", size_}, {"tensors", tensors}}.dump();
}

ParamLayout ParamLayout::FromJson(const std::string& text) {
  json j = json::parse(text);
  std::vector<TensorSlot> slots;
  for (const auto& t : j.at("tensors")) {
    TensorSlot s;
    s.branch = t.at("branch").get<int>();
    s.layer = t.at("layer").get<int>();
    s.tensor = t.at("tensor").get<std::string>();
    s.offset = t.at("offset").get<std::size_t>();
    s.extent = t.at("extent").get<std::size_t>();
    s.rows = t.at("shape").at(0).get<int>();
    s.cols = t.at("shape").at(1).get<int>();
    slots.push_back(std::move(s));
  }
  ParamLayout layout = FromSlots(std::move(slots));
  if (layout.size() != j.at("size").get<std::size_t>()) {
    throw std::invalid_argument("layout size does not match its tensors");
  }
  return layout;
}

bool ParamVector::AllFinite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void WriteParams(std::ostream& out, const ParamVector& params) {
  std::string header = params.layout->ToJson();
  PutLe64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (double v : params.values) PutLe64(out, std::bit_cast<std::uint64_t>(v));
}

ParamVector ReadParams(std::istream& in) {
  std::uint64_t header_len = GetLe64(in);
  if (header_len > (1u << 24)) throw std::runtime_error("implausible layout header length");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) {
    throw std::runtime_error("truncated parameter file");
  }
  ParamVector params;
  params.layout = std::make_shared<const ParamLayout>(ParamLayout::FromJson(header));
  params.values.resize(params.layout->size());
  for (double& v : params.values) v = std::bit_cast<double>(GetLe64(in));
  return params;
}

void SampleBatch::Validate() const {
  std::size_t n = steer_level.size();
  if (input1.size() != n * features1 || input2.size() != n * features2 ||
      throttle_brake.size() != n * 2) {
    throw std::invalid_argument("sample batch fields disagree on the batch size");
  }
  for (int level : steer_level) {
    if (level < 0 || level >= kSteerLevels) {
      throw std::invalid_argument("steer level outside [0, 6]");
    }
  }
}

SampleBatch SampleBatch::Gather(std::span<const std::size_t> rows) const {
  SampleBatch out;
  out.features1 = features1;
  out.features2 = features2;
  out.input1.reserve(rows.size() * features1);
  out.input2.reserve(rows.size() * features2);
  out.throttle_brake.reserve(rows.size() * 2);
  out.steer_level.reserve(rows.size());
  for (std::size_t r : rows) {
    out.input1.insert(out.input1.end(), input1.begin() + r * features1,
                      input1.begin() + (r + 1) * features1);
    out.input2.insert(out.input2.end(), input2.begin() + r * features2,
                      input2.begin() + (r + 1) * features2);
    out.throttle_brake.insert(out.throttle_brake.end(), throttle_brake.begin() + r * 2,
                              throttle_brake.begin() + (r + 1) * 2);
    out.steer_level.push_back(steer_level[r]);
  }
  return out;
}

void SampleBatch::Append(const SampleBatch& other) {
  if (empty() && features1 == 0 && features2 == 0) {
    features1 = other.features1;
    features2 = other.features2;
  }
  if (other.features1 != features1 || other.features2 != features2) {
    throw std::invalid_argument("cannot append batches with different feature widths");
  }
  input1.insert(input1.end(), other.input1.begin(), other.input1.end());
  input2.insert(input2.end(), other.input2.begin(), other.input2.end());
  throttle_brake.insert(throttle_brake.end(), other.throttle_brake.begin(),
                        other.throttle_brake.end());
  steer_level.insert(steer_level.end(), other.steer_level.begin(), other.steer_level.end());
}

TwoBranchModel TwoBranchModel::Zeros(const ModelDims& dims) {
  TwoBranchModel model;
  model.dims_ = dims;
  auto layout = std::make_shared<const ParamLayout>(ParamLayout::ForDims(dims));
  model.params_.values.assign(layout->size(), 0.0);
  model.params_.layout = std::move(layout);
  return model;
}

TwoBranchModel TwoBranchModel::Initialize(const ModelDims& dims, Rng& rng) {
  TwoBranchModel model = Zeros(dims);
  for (const auto& slot : model.params_.layout->slots()) {
    int fan_in = slot.tensor == "weight" ? slot.rows : Widths(dims, slot.branch)[slot.layer];
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < slot.extent; ++i) {
      model.params_.values[slot.offset + i] = rng.Uniform(-bound, bound);
    }
  }
  return model;
}

TwoBranchModel TwoBranchModel::FromParams(ParamVector params) {
  TwoBranchModel model;
  model.dims_ = params.layout->dims();
  if (!(*params.layout == ParamLayout::ForDims(model.dims_))) {
    throw std::invalid_argument("parameter layout is not a two-branch layout");
  }
  if (params.values.size() != params.layout->size()) {
    throw std::invalid_argument("parameter count does not match the layout");
  }
  model.params_ = std::move(params);
  return model;
}

ForwardResult Forward(const TwoBranchModel& model, const SampleBatch& batch) {
  Traces t = RunForward(model, batch);
  return {std::move(t.branch1.acts.back()), std::move(t.branch2.acts.back())};
}

LossBreakdown ComputeLoss(const TwoBranchModel& model, const SampleBatch& batch) {
  if (batch.empty()) throw std::invalid_argument("loss of an empty batch");
  Traces t = RunForward(model, batch);
  return LossFromOutputs(t.branch1.acts.back(), t.branch2.acts.back(), batch);
}

LossAndGradient LossAndGrad(const TwoBranchModel& model, const SampleBatch& batch) {
  if (batch.empty()) throw std::invalid_argument("gradient of an empty batch");
  Traces t = RunForward(model, batch);
  const auto& pred = t.branch1.acts.back();
  const auto& logits = t.branch2.acts.back();
  LossAndGradient out;
  out.loss = LossFromOutputs(pred, logits, batch);
  out.grad.assign(model.params().size(), 0.0);

  std::size_t n = t.n;
  double mse_scale = 2.0 / static_cast<double>(n * 2);
  std::vector<double> delta1(n * 2);
  for (std::size_t i = 0; i < delta1.size(); ++i) {
    double p = pred[i];
    delta1[i] = mse_scale * (p - batch.throttle_brake[i]) * p * (1.0 - p);
  }
  std::vector<double> delta2(n * kSteerLevels);
  double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double* z = logits.data() + s * kSteerLevels;
    double* d = delta2.data() + s * kSteerLevels;
    double top = *std::max_element(z, z + kSteerLevels);
    double sum = 0.0;
    for (int c = 0; c < kSteerLevels; ++c) {
      d[c] = std::exp(z[c] - top);
      sum += d[c];
    }
    for (int c = 0; c < kSteerLevels; ++c) d[c] = d[c] / sum * inv_n;
    d[batch.steer_level[s]] -= inv_n;
  }

  BackwardBranch(model.params(), model.dims(), 1, t.branch1, n, std::move(delta1), out.grad);
  BackwardBranch(model.params(), model.dims(), 2, t.branch2, n, std::move(delta2), out.grad);
  for (double g : out.grad) {
    if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient");
  }
  return out;
}

AdamState AdamState::ZerosLike(const ParamVector& params) {
  AdamState state;
  state.first_moment.assign(params.size(), 0.0);
  state.second_moment.assign(params.size(), 0.0);
  return state;
}

void AdamStep(ParamVector& params, std::span<const double> grad, AdamState& state,
              const TrainHyper& hyper) {
  std::size_t n = params.size();
  if (grad.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw std::invalid_argument("Adam shapes do not match the parameters");
  }
  state.step_count += 1;
  double t = static_cast<double>(state.step_count);
  double b1 = hyper.adam_beta1;
  double b2 = hyper.adam_beta2;
  double bias1 = 1.0 - std::pow(b1, t);
  double bias2_sqrt = std::sqrt(1.0 - std::pow(b2, t));
  double step = hyper.learning_rate / bias1;
  double wd = hyper.weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    double g = grad[i] + wd * params.values[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    double denom = std::sqrt(v) / bias2_sqrt + kAdamEpsilon;
    params.values[i] -= step * m / denom;
  }
}

MetricsRecord Evaluate(const TwoBranchModel& model, const SampleBatch& test_set, int round,
                       double consumed_mb) {
  if (test_set.empty()) throw std::invalid_argument("evaluation needs a non-empty test set");
  Traces t = RunForward(model, test_set);
  const auto& logits = t.branch2.acts.back();
  LossBreakdown loss = LossFromOutputs(t.branch1.acts.back(), logits, test_set);
  std::size_t correct = 0;
  for (std::size_t s = 0; s < test_set.size(); ++s) {
    const double* z = logits.data() + s * kSteerLevels;
    int arg = static_cast<int>(std::max_element(z, z + kSteerLevels) - z);
    if (arg == test_set.steer_level[s]) ++correct;
  }
  MetricsRecord record;
  record.round = round;
  record.consumed_mb = consumed_mb;
  record.loss = loss.total();
  record.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
  return record;
}

}  // namespace crchfl
