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

#include "dpcore/privatizer.h"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

constexpr double kSensitivityTolerance = 1e-12;

absl::Status CheckNonNegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    return absl::InvalidArgumentError(
        absl::StrCat(name, " must be finite and non-negative, got ", v));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Privatizer> Privatizer::Gaussian(double noise_multiplier,
                                                double sensitivity) {
  if (absl::Status s = CheckNonNegative(noise_multiplier, "noise multiplier");
      !s.ok()) {
    return s;
  }
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    return absl::InvalidArgumentError("sensitivity must be positive");
  }
  return Privatizer(PrivatizerKind::kGaussian, noise_multiplier * sensitivity,
                    sensitivity, {1.0});
}

absl::StatusOr<Privatizer> Privatizer::BandedWithStddev(
    double stddev, double sensitivity, std::vector<double> coefficients) {
  if (absl::Status s = CheckNonNegative(stddev, "noise stddev"); !s.ok()) {
    return s;
  }
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    return absl::InvalidArgumentError("sensitivity must be positive");
  }
  if (coefficients.empty() || !(coefficients[0] > 0.0)) {
    return absl::InvalidArgumentError(
        "banded privatizer needs a positive leading coefficient");
  }
  for (double c : coefficients) {
    if (!std::isfinite(c)) {
      return absl::InvalidArgumentError("band coefficients must be finite");
    }
  }
  return Privatizer(PrivatizerKind::kBandedCorrelated, stddev, sensitivity,
                    std::move(coefficients));
}

absl::StatusOr<Privatizer> Privatizer::BandedForStrategy(
    double noise_multiplier, double sensitivity, const Strategy& strategy,
    std::size_t steps) {
  if (absl::Status s = CheckNonNegative(noise_multiplier, "noise multiplier");
      !s.ok()) {
    return s;
  }
  return BandedWithStddev(
      noise_multiplier * sensitivity * StrategySensitivity(strategy, steps),
      sensitivity, strategy.coefficients());
}

bool PrivatizerState::operator==(const PrivatizerState& other) const {
  return step == other.step && key == other.key &&
         SameLayout(layout, other.layout) && history == other.history &&
         capacity == other.capacity;
}

absl::StatusOr<PrivatizerState> InitPrivatizer(const Privatizer& privatizer,
                                               LayoutPtr layout, PrngKey key) {
  if (layout == nullptr) return absl::InvalidArgumentError("null layout");
  PrivatizerState state;
  state.key = std::move(key);
  state.layout = std::move(layout);
  state.capacity = privatizer.band() - 1;
  return state;
}

absl::StatusOr<std::pair<GradientVector, PrivatizerState>> Privatize(
    const Privatizer& privatizer, const ClippedGradientSum& sum,
    PrivatizerState state) {
  if (!SameLayout(sum.sum.layout(), state.layout)) {
    return absl::InvalidArgumentError(
        "gradient layout does not match privatizer state");
  }
  if (std::abs(sum.sensitivity - privatizer.sensitivity()) >
      kSensitivityTolerance * std::max(1.0, privatizer.sensitivity())) {
    return absl::FailedPreconditionError(absl::StrCat(
        "privatizer was calibrated for sensitivity ", privatizer.sensitivity(),
        " but the gradient sum carries sensitivity ", sum.sensitivity,
        "; noise calibration has diverged from the clipping configuration"));
  }

  GradientVector noise(state.layout);
  FillGaussian(FoldIn(state.key, state.step), privatizer.stddev(),
               noise.values());

  if (privatizer.kind() == PrivatizerKind::kBandedCorrelated) {
    const std::vector<double>& c = privatizer.coefficients();
    std::span<double> z = noise.values();
    const std::int64_t width = static_cast<std::int64_t>(z.size());
#pragma omp parallel for schedule(static) if (width > 65536)
    for (std::int64_t i = 0; i < width; ++i) {
      double v = z[i];
      for (std::size_t j = 0; j < state.history.size(); ++j) {
        v -= c[j + 1] * state.history[j][i];
      }
      z[i] = v / c[0];
    }
    if (state.capacity > 0) {
      state.history.push_front(noise);
      if (state.history.size() > state.capacity) state.history.pop_back();
    }
  }

  GradientVector out = sum.sum;
  if (privatizer.stddev() != 0.0) {
    if (absl::Status s = out.AddScaled(noise); !s.ok()) return s;
  }
  ++state.step;
  return std::make_pair(std::move(out), std::move(state));
}

}  // namespace dpcore
