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

#ifndef DPCORE_ACCOUNTING_H_
#define DPCORE_ACCOUNTING_H_

#include <cstddef>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcore/matrix_factorization.h"

namespace dpcore {

// Renyi DP curve over integer orders. Values add under composition.
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;
};

// Integer orders 2..512.
const std::vector<int>& DefaultOrders();

// RDP of the Poisson-subsampled Gaussian mechanism (add/remove adjacency,
// sensitivity 1, noise multiplier sigma) at integer orders:
//   (1/(a-1)) log sum_k binom(a,k) (1-q)^(a-k) q^k exp(k(k-1)/(2 sigma^2)).
// Evaluated in the log domain. sigma == 0 gives +inf (0 when q == 0).
absl::StatusOr<RdpCurve> RdpSubsampledGaussian(double q, double sigma,
                                               const std::vector<int>& orders);

// Pointwise T-fold composition. T >= 1.
absl::StatusOr<RdpCurve> Compose(const RdpCurve& curve, std::size_t steps);

struct EpsilonAtOrder {
  double epsilon = 0.0;
  double order = 0.0;
};

// eps = min_a [ RDP(a) + log(1/delta)/(a-1) ].
absl::StatusOr<EpsilonAtOrder> RdpToEpsilonClassic(const RdpCurve& curve,
                                                   double delta);

// Tighter conversion used by Epsilon():
//   eps = min_a max(0, RDP(a) + log(1 - 1/a) - (log delta + log a)/(a-1)).
// Never larger than the classic bound for a >= 2.
absl::StatusOr<EpsilonAtOrder> RdpToEpsilon(const RdpCurve& curve,
                                            double delta);

// delta(eps) of the Gaussian mechanism with sensitivity 1 and noise sigma:
//   Phi(1/(2 sigma) - eps sigma) - e^eps Phi(-1/(2 sigma) - eps sigma).
double AnalyticGaussianDelta(double sigma, double epsilon);

// Smallest eps >= 0 with AnalyticGaussianDelta(sigma, eps) <= delta, by
// bisection. Returns 0 when delta(0) <= delta already.
absl::StatusOr<double> AnalyticGaussianEpsilon(double sigma, double delta);

// Smallest sigma in [1e-2, 1e3] (relative tolerance 1e-4) whose analytic
// Gaussian epsilon is <= target.
absl::StatusOr<double> CalibrateAnalyticGaussian(double target_epsilon,
                                                 double delta);

struct PrivacySpec {
  double delta = 1e-5;
  double noise_multiplier = 0.0;
  double sampling_prob = 1.0;
  std::size_t steps = 1;
  // From the batch plan. Plans that are not Poisson-sampled cannot claim
  // amplification, i.e. they must be accounted with q = 1.
  bool amplification_valid = true;
};

// DP-SGD epsilon via integer-order RDP over DefaultOrders(). +inf when the
// noise multiplier is 0. A plan without valid amplification and q < 1 is a
// FailedPrecondition policy error.
absl::StatusOr<double> Epsilon(const PrivacySpec& spec);

// Smallest noise multiplier on a bisection grid over [1e-2, 1e3] (relative
// tolerance 1e-4) with Epsilon(...) <= target. OutOfRange if even 1e3 misses.
absl::StatusOr<double> CalibrateNoise(double target_epsilon, double delta,
                                      double sampling_prob, std::size_t steps);

// Epsilon of a banded matrix-factorization run in which every example
// participates at most once. The privatizer adds noise with stddev
// sigma * Delta * sens(C), so the released C x + z is one Gaussian mechanism
// with noise multiplier sigma.
absl::StatusOr<double> MfEpsilon(const Strategy& strategy, double sigma,
                                 double delta, std::size_t steps);

// Same, starting from the privatizer's actual stddev: the effective noise
// multiplier is stddev / (sensitivity * sens(C)).
absl::StatusOr<double> MfEpsilonForStddev(const Strategy& strategy,
                                          double stddev, double sensitivity,
                                          double delta, std::size_t steps);

}  // namespace dpcore

#endif  // DPCORE_ACCOUNTING_H_
