// Copyright 2026 The dpcore Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpcore/model.h"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double LossFromOutput(LossKind loss, double z, double y) {
  if (loss == LossKind::kSquared) {
    const double r = z - y;
    return 0.5 * r * r;
  }
  return Softplus(z) - y * z;
}

// d loss / d z.
double OutputGrad(LossKind loss, double z, double y) {
  if (loss == LossKind::kSquared) return z - y;
  return Sigmoid(z) - y;
}

double Activate(Activation act, double a) {
  return act == Activation::kRelu ? std::max(a, 0.0) : std::tanh(a);
}

double ActivateGrad(Activation act, double a, double h) {
  if (act == Activation::kRelu) return a > 0.0 ? 1.0 : 0.0;
  return 1.0 - h * h;
}

std::vector<double>& HiddenScratch(std::size_t n) {
  thread_local std::vector<double> scratch;
  if (scratch.size() < n) scratch.resize(n);
  return scratch;
}

// Forward pass; fills hidden pre-activations and activations for the MLP.
double Forward(const ModelSpec& model, std::span<const double> p,
               std::span<const double> x, double* pre, double* hidden) {
  const std::size_t d = model.input_dim;
  if (model.kind != ModelKind::kMlp) {
    return Dot(p.first(d), x) + p[d];
  }
  const std::size_t h = model.hidden_dim;
  const double* w1 = p.data();
  const double* b1 = w1 + d * h;
  const double* w2 = b1 + h;
  const double b2 = w2[h];
  double z = b2;
  for (std::size_t j = 0; j < h; ++j) {
    double a = b1[j];
    const double* row = w1 + j * d;
    for (std::size_t i = 0; i < d; ++i) a += row[i] * x[i];
    pre[j] = a;
    hidden[j] = Activate(model.activation, a);
    z += w2[j] * hidden[j];
  }
  return z;
}

}  // namespace

LossKind ModelSpec::effective_loss() const {
  switch (kind) {
    case ModelKind::kLinearRegression:
      return LossKind::kSquared;
    case ModelKind::kLogisticRegression:
      return LossKind::kLogistic;
    case ModelKind::kMlp:
      return loss;
  }
  return loss;
}

absl::Status ValidateDataset(const Dataset& dataset) {
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const Example& ex = dataset.examples[i];
    if (!ex.is_dummy && ex.features.size() != dataset.feature_dim) {
      return absl::InvalidArgumentError(
          absl::StrCat("example ", i, " has ", ex.features.size(),
                       " features, dataset dimension is ", dataset.feature_dim));
    }
  }
  return absl::OkStatus();
}

absl::Status ValidateModel(const ModelSpec& model) {
  if (model.input_dim == 0) {
    return absl::InvalidArgumentError("input dimension must be positive");
  }
  if (model.kind == ModelKind::kMlp && model.hidden_dim == 0) {
    return absl::InvalidArgumentError("MLP hidden width must be positive");
  }
  return absl::OkStatus();
}

absl::StatusOr<LayoutPtr> ParamLayout(const ModelSpec& model) {
  if (absl::Status s = ValidateModel(model); !s.ok()) return s;
  const std::size_t d = model.input_dim;
  if (model.kind != ModelKind::kMlp) {
    return Layout::FromSizes({{"w", d}, {"b", 1}});
  }
  const std::size_t h = model.hidden_dim;
  return Layout::FromSizes({{"w1", d * h}, {"b1", h}, {"w2", h}, {"b2", 1}});
}

absl::StatusOr<GradientVector> InitParams(const ModelSpec& model,
                                          const PrngKey& key) {
  absl::StatusOr<LayoutPtr> layout = ParamLayout(model);
  if (!layout.ok()) return layout.status();
  GradientVector params(*layout);
  if (model.kind != ModelKind::kMlp) {
    FillGaussian(FoldIn(key, 0), 1.0 / std::sqrt(double(model.input_dim)),
                 params.segment("w"));
    return params;
  }
  FillGaussian(FoldIn(key, 0), 1.0 / std::sqrt(double(model.input_dim)),
               params.segment("w1"));
  FillGaussian(FoldIn(key, 1), 1.0 / std::sqrt(double(model.hidden_dim)),
               params.segment("w2"));
  return params;
}

namespace internal {

absl::Status CheckExample(const ModelSpec& model, const GradientVector& params,
                          const Example& example) {
  absl::StatusOr<LayoutPtr> layout = ParamLayout(model);
  if (!layout.ok()) return layout.status();
  if (!SameLayout(*layout, params.layout())) {
    return absl::InvalidArgumentError("parameter layout does not match model");
  }
  if (!example.is_dummy && example.features.size() != model.input_dim) {
    return absl::InvalidArgumentError(
        absl::StrCat("example has ", example.features.size(),
                     " features, model expects ", model.input_dim));
  }
  return absl::OkStatus();
}

double LossUnchecked(const ModelSpec& model, std::span<const double> params,
                     const Example& example) {
  if (example.is_dummy) return 0.0;
  std::vector<double>& scratch = HiddenScratch(2 * model.hidden_dim);
  const double z = Forward(model, params, example.features, scratch.data(),
                           scratch.data() + model.hidden_dim);
  return LossFromOutput(model.effective_loss(), z, example.label);
}

void GradUnchecked(const ModelSpec& model, std::span<const double> params,
                   const Example& example, std::span<double> grad) {
  if (example.is_dummy) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return;
  }
  const std::size_t d = model.input_dim;
  const std::span<const double> x = example.features;
  if (model.kind != ModelKind::kMlp) {
    const double z = Dot(params.first(d), x) + params[d];
    const double dz = OutputGrad(model.effective_loss(), z, example.label);
    for (std::size_t i = 0; i < d; ++i) grad[i] = dz * x[i];
    grad[d] = dz;
    return;
  }
  const std::size_t h = model.hidden_dim;
  std::vector<double>& scratch = HiddenScratch(2 * h);
  double* pre = scratch.data();
  double* hidden = pre + h;
  const double z = Forward(model, params, x, pre, hidden);
  const double dz = OutputGrad(model.effective_loss(), z, example.label);

  const double* w2 = params.data() + d * h + h;
  double* gw1 = grad.data();
  double* gb1 = gw1 + d * h;
  double* gw2 = gb1 + h;
  for (std::size_t j = 0; j < h; ++j) {
    gw2[j] = dz * hidden[j];
    const double da =
        dz * w2[j] * ActivateGrad(model.activation, pre[j], hidden[j]);
    gb1[j] = da;
    double* row = gw1 + j * d;
    for (std::size_t i = 0; i < d; ++i) row[i] = da * x[i];
  }
  gw2[h] = dz;
}

void AccumulateGradUnchecked(const ModelSpec& model,
                             std::span<const double> params,
                             const Example& example, std::span<double> acc) {
  if (example.is_dummy) return;
  const std::size_t d = model.input_dim;
  const std::span<const double> x = example.features;
  if (model.kind != ModelKind::kMlp) {
    const double z = Dot(params.first(d), x) + params[d];
    const double dz = OutputGrad(model.effective_loss(), z, example.label);
    for (std::size_t i = 0; i < d; ++i) acc[i] += dz * x[i];
    acc[d] += dz;
    return;
  }
  const std::size_t h = model.hidden_dim;
  std::vector<double>& scratch = HiddenScratch(2 * h);
  double* pre = scratch.data();
  double* hidden = pre + h;
  const double z = Forward(model, params, x, pre, hidden);
  const double dz = OutputGrad(model.effective_loss(), z, example.label);
  const double* w2 = params.data() + d * h + h;
  double* gw1 = acc.data();
  double* gb1 = gw1 + d * h;
  double* gw2 = gb1 + h;
  for (std::size_t j = 0; j < h; ++j) {
    gw2[j] += dz * hidden[j];
    const double da =
        dz * w2[j] * ActivateGrad(model.activation, pre[j], hidden[j]);
    gb1[j] += da;
    double* row = gw1 + j * d;
    for (std::size_t i = 0; i < d; ++i) row[i] += da * x[i];
  }
  gw2[h] += dz;
}

}  // namespace internal

absl::StatusOr<GradientVector> BatchGradSum(const ModelSpec& model,
                                            const GradientVector& params,
                                            std::span<const Example> batch) {
  absl::StatusOr<LayoutPtr> layout = ParamLayout(model);
  if (!layout.ok()) return layout.status();
  if (!SameLayout(*layout, params.layout())) {
    return absl::InvalidArgumentError("parameter layout does not match model");
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].is_dummy && batch[i].features.size() != model.input_dim) {
      return absl::InvalidArgumentError(
          absl::StrCat("batch example ", i, " has wrong feature dimension"));
    }
  }
  GradientVector out(params.layout());
  const std::size_t width = params.size();
  const std::int64_t chunks =
      static_cast<std::int64_t>((batch.size() + kBatchGradChunk - 1) /
                                kBatchGradChunk);
  if (chunks == 1) {
    for (const Example& ex : batch) {
      internal::AccumulateGradUnchecked(model, params.values(), ex,
                                        out.values());
    }
    return out;
  }
  std::vector<double> partial(static_cast<std::size_t>(chunks) * width, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < chunks; ++c) {
    std::span<double> acc(partial.data() + c * width, width);
    const std::size_t end =
        std::min(batch.size(), static_cast<std::size_t>(c + 1) * kBatchGradChunk);
    for (std::size_t i = c * kBatchGradChunk; i < end; ++i) {
      internal::AccumulateGradUnchecked(model, params.values(), batch[i], acc);
    }
  }
  std::span<double> total = out.values();
  for (std::int64_t c = 0; c < chunks; ++c) {
    for (std::size_t j = 0; j < width; ++j) total[j] += partial[c * width + j];
  }
  return out;
}

absl::StatusOr<double> PerExampleLoss(const ModelSpec& model,
                                      const GradientVector& params,
                                      const Example& example) {
  if (absl::Status s = internal::CheckExample(model, params, example); !s.ok()) {
    return s;
  }
  return internal::LossUnchecked(model, params.values(), example);
}

absl::StatusOr<GradientVector> PerExampleGrad(const ModelSpec& model,
                                              const GradientVector& params,
                                              const Example& example) {
  if (absl::Status s = internal::CheckExample(model, params, example); !s.ok()) {
    return s;
  }
  GradientVector grad(params.layout());
  internal::GradUnchecked(model, params.values(), example, grad.values());
  return grad;
}

absl::StatusOr<double> MeanLoss(const ModelSpec& model,
                                const GradientVector& params,
                                const Dataset& dataset) {
  double total = 0.0;
  std::size_t count = 0;
  for (const Example& ex : dataset.examples) {
    if (ex.is_dummy) continue;
    if (count == 0 || ex.features.size() != model.input_dim) {
      if (absl::Status s = internal::CheckExample(model, params, ex); !s.ok()) {
        return s;
      }
    }
    total += internal::LossUnchecked(model, params.values(), ex);
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

absl::StatusOr<double> Predict(const ModelSpec& model,
                               const GradientVector& params,
                               const Example& example) {
  if (absl::Status s = internal::CheckExample(model, params, example); !s.ok()) {
    return s;
  }
  std::vector<double>& scratch = HiddenScratch(2 * model.hidden_dim);
  return Forward(model, params.values(), example.features, scratch.data(),
                 scratch.data() + model.hidden_dim);
}

}  // namespace dpcore
