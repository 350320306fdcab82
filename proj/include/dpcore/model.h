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

#ifndef DPCORE_MODEL_H_
#define DPCORE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/gradient_vector.h"
#include "dpcore/prng.h"

namespace dpcore {

struct Example {
  std::vector<double> features;
  // Regression target, or class index 0/1 stored as a double.
  double label = 0.0;
  std::optional<std::int64_t> group;
  // Padding slot. Contributes zero to every loss and gradient.
  bool is_dummy = false;
};

enum class TaskKind { kRegression, kBinaryClassification };

struct Dataset {
  std::vector<Example> examples;
  std::size_t feature_dim = 0;
  TaskKind task = TaskKind::kRegression;

  std::size_t size() const { return examples.size(); }
};

// Checks every example has `feature_dim` features.
absl::Status ValidateDataset(const Dataset& dataset);

enum class ModelKind { kLinearRegression, kLogisticRegression, kMlp };
enum class Activation { kRelu, kTanh };
enum class LossKind { kSquared, kLogistic };

struct ModelSpec {
  ModelKind kind = ModelKind::kLogisticRegression;
  std::size_t input_dim = 0;
  // Hidden width, MLP only.
  std::size_t hidden_dim = 0;
  Activation activation = Activation::kTanh;
  // MLP only; linear and logistic regression imply their loss.
  LossKind loss = LossKind::kLogistic;

  static ModelSpec Linear(std::size_t d) {
    return {ModelKind::kLinearRegression, d, 0, Activation::kTanh,
            LossKind::kSquared};
  }
  static ModelSpec Logistic(std::size_t d) {
    return {ModelKind::kLogisticRegression, d, 0, Activation::kTanh,
            LossKind::kLogistic};
  }
  static ModelSpec Mlp(std::size_t d, std::size_t hidden, Activation act,
                       LossKind loss) {
    return {ModelKind::kMlp, d, hidden, act, loss};
  }

  LossKind effective_loss() const;
};

absl::Status ValidateModel(const ModelSpec& model);

// Linear/logistic: [("w", d), ("b", 1)].
// MLP: [("w1", d*h), ("b1", h), ("w2", h), ("b2", 1)], w1 row-major by hidden
// unit.
absl::StatusOr<LayoutPtr> ParamLayout(const ModelSpec& model);

// Weights ~ N(0, 1/fan_in), biases 0. Each weight segment draws from its own
// child key.
absl::StatusOr<GradientVector> InitParams(const ModelSpec& model,
                                          const PrngKey& key);

// Linear: 0.5 (w.x + b - y)^2. Logistic: -[y log p + (1-y) log(1-p)] with
// p = sigmoid(w.x + b). Dummy examples have loss 0.
absl::StatusOr<double> PerExampleLoss(const ModelSpec& model,
                                      const GradientVector& params,
                                      const Example& example);

// Exact gradient of PerExampleLoss with respect to params. Same layout as
// params; zero for dummy examples. Non-finite inputs propagate.
absl::StatusOr<GradientVector> PerExampleGrad(const ModelSpec& model,
                                              const GradientVector& params,
                                              const Example& example);

// Mean loss over the non-dummy examples of `dataset`; 0 when there are none.
absl::StatusOr<double> MeanLoss(const ModelSpec& model,
                                const GradientVector& params,
                                const Dataset& dataset);

// Sum of unclipped per-example gradients over the non-dummy examples: the
// non-private baseline. Examples are reduced in fixed chunks of
// kBatchGradChunk, chunk partials in order, so the result does not depend on
// the thread count.
absl::StatusOr<GradientVector> BatchGradSum(const ModelSpec& model,
                                            const GradientVector& params,
                                            std::span<const Example> batch);

inline constexpr std::size_t kBatchGradChunk = 64;

// Model output before the link function (the logit for classification).
absl::StatusOr<double> Predict(const ModelSpec& model,
                               const GradientVector& params,
                               const Example& example);

namespace internal {

// Unchecked kernels used by the batched code paths. `grad` must have
// params.size() entries; it is overwritten.
double LossUnchecked(const ModelSpec& model, std::span<const double> params,
                     const Example& example);
void GradUnchecked(const ModelSpec& model, std::span<const double> params,
                   const Example& example, std::span<double> grad);
// acc += gradient, without materializing the per-example gradient.
void AccumulateGradUnchecked(const ModelSpec& model,
                             std::span<const double> params,
                             const Example& example, std::span<double> acc);

absl::Status CheckExample(const ModelSpec& model, const GradientVector& params,
                          const Example& example);

}  // namespace internal

}  // namespace dpcore

#endif  // DPCORE_MODEL_H_
