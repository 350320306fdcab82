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

#ifndef DPCORE_OPTIMIZER_H_
#define DPCORE_OPTIMIZER_H_

#include <cstddef>
#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/gradient_vector.h"

namespace dpcore {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

struct OptimizerState {
  std::size_t step = 0;
  GradientVector first_moment;
  GradientVector second_moment;
};

// update = -lr * g.
absl::StatusOr<GradientVector> SgdUpdate(double learning_rate,
                                         const GradientVector& grad,
                                         const GradientVector& params);

OptimizerState AdamWInit(const GradientVector& params);

// Decoupled weight decay:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   update = -lr (m_hat / (sqrt(v_hat) + eps) + wd * params)
absl::StatusOr<std::pair<GradientVector, OptimizerState>> AdamWUpdate(
    const AdamWConfig& config, const GradientVector& grad, OptimizerState state,
    const GradientVector& params);

// params += update.
absl::Status ApplyUpdates(GradientVector& params, const GradientVector& update);

}  // namespace dpcore

#endif  // DPCORE_OPTIMIZER_H_
