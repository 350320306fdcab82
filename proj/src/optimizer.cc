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

#include "dpcore/optimizer.h"

#include <cmath>

namespace dpcore {

absl::StatusOr<GradientVector> SgdUpdate(double learning_rate,
                                         const GradientVector& grad,
                                         const GradientVector& params) {
  if (!SameLayout(grad.layout(), params.layout())) {
    return absl::InvalidArgumentError("gradient and parameter layouts differ");
  }
  GradientVector update(grad.layout());
  if (absl::Status s = update.AddScaled(grad, -learning_rate); !s.ok()) return s;
  return update;
}

OptimizerState AdamWInit(const GradientVector& params) {
  return OptimizerState{0, GradientVector(params.layout()),
                        GradientVector(params.layout())};
}

absl::StatusOr<std::pair<GradientVector, OptimizerState>> AdamWUpdate(
    const AdamWConfig& config, const GradientVector& grad, OptimizerState state,
    const GradientVector& params) {
  if (!SameLayout(grad.layout(), params.layout()) ||
      !SameLayout(state.first_moment.layout(), params.layout()) ||
      !SameLayout(state.second_moment.layout(), params.layout())) {
    return absl::InvalidArgumentError("optimizer state layout mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double m_correction = 1.0 - std::pow(config.beta1, t);
  const double v_correction = 1.0 - std::pow(config.beta2, t);
  GradientVector update(params.layout());
  std::span<double> m = state.first_moment.values();
  std::span<double> v = state.second_moment.values();
  std::span<const double> g = grad.values();
  std::span<const double> p = params.values();
  std::span<double> u = update.values();
  for (std::size_t i = 0; i < u.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double m_hat = m[i] / m_correction;
    const double v_hat = v[i] / v_correction;
    u[i] = -config.learning_rate *
           (m_hat / (std::sqrt(v_hat) + config.epsilon) +
            config.weight_decay * p[i]);
  }
  return std::make_pair(std::move(update), std::move(state));
}

absl::Status ApplyUpdates(GradientVector& params, const GradientVector& update) {
  return params.AddScaled(update);
}

}  // namespace dpcore
