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

#ifndef DPCORE_PRIVATIZER_H_
#define DPCORE_PRIVATIZER_H_

#include <cstddef>
#include <deque>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcore/clipping.h"
#include "dpcore/gradient_vector.h"
#include "dpcore/matrix_factorization.h"
#include "dpcore/prng.h"

namespace dpcore {

enum class PrivatizerKind { kGaussian, kBandedCorrelated };

// Noise addition as a pure state transition. Configured with the total noise
// stddev and, separately, the sensitivity that stddev was calibrated for;
// Privatize() refuses sums whose attached sensitivity differs.
class Privatizer {
 public:
  // stddev = noise_multiplier * sensitivity.
  static absl::StatusOr<Privatizer> Gaussian(double noise_multiplier,
                                             double sensitivity);

  // Correlated noise z~_t = (z_t - sum_{j>=1} c_j z~_{t-j}) / c_0, i.e. rows
  // of C^{-1} Z for the banded Toeplitz C. `stddev` is the stddev of each
  // fresh z_t. Requires c_0 > 0.
  static absl::StatusOr<Privatizer> BandedWithStddev(
      double stddev, double sensitivity, std::vector<double> coefficients);

  // Banded privatizer whose fresh noise has stddev
  // noise_multiplier * sensitivity * sens(C), which makes the whole run a
  // Gaussian mechanism with noise multiplier `noise_multiplier` for an example
  // that participates once.
  static absl::StatusOr<Privatizer> BandedForStrategy(double noise_multiplier,
                                                      double sensitivity,
                                                      const Strategy& strategy,
                                                      std::size_t steps);

  PrivatizerKind kind() const { return kind_; }
  double stddev() const { return stddev_; }
  double sensitivity() const { return sensitivity_; }
  // Gaussian privatizers report the single coefficient {1}.
  const std::vector<double>& coefficients() const { return coefficients_; }
  std::size_t band() const { return coefficients_.size(); }

 private:
  Privatizer(PrivatizerKind kind, double stddev, double sensitivity,
             std::vector<double> coefficients)
      : kind_(kind),
        stddev_(stddev),
        sensitivity_(sensitivity),
        coefficients_(std::move(coefficients)) {}

  PrivatizerKind kind_;
  double stddev_;
  double sensitivity_;
  std::vector<double> coefficients_;
};

struct PrivatizerState {
  std::size_t step = 0;
  // Root key; step t draws from FoldIn(key, t).
  PrngKey key;
  LayoutPtr layout;
  // Previous correlated noise, most recent first. Holds min(step, band - 1)
  // vectors.
  std::deque<GradientVector> history;
  std::size_t capacity = 0;

  bool operator==(const PrivatizerState& other) const;
};

absl::StatusOr<PrivatizerState> InitPrivatizer(const Privatizer& privatizer,
                                               LayoutPtr layout, PrngKey key);

// Returns sum + noise and the advanced state. An empty batch (contributing
// count 0) still yields a pure-noise output and advances the state. A sum
// whose sensitivity differs from the privatizer's is FailedPrecondition.
absl::StatusOr<std::pair<GradientVector, PrivatizerState>> Privatize(
    const Privatizer& privatizer, const ClippedGradientSum& sum,
    PrivatizerState state);

}  // namespace dpcore

#endif  // DPCORE_PRIVATIZER_H_
