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

#include "dpcore/accounting.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSigmaLow = 1e-2;
constexpr double kSigmaHigh = 1e3;
constexpr double kCalibrationRelTol = 1e-4;

double LogSumExp(const std::vector<double>& terms) {
  double m = -kInf;
  for (double t : terms) m = std::max(m, t);
  if (m == -kInf) return -kInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

// Standard normal CDF; erfc keeps the lower tail accurate.
double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double RdpAtOrder(double q, double sigma, int alpha) {
  if (q == 0.0) return 0.0;
  if (sigma == 0.0) return kInf;
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  std::vector<double> terms(alpha + 1, -kInf);
  double log_binom = 0.0;
  for (int k = 0; k <= alpha; ++k) {
    if (k > 0) log_binom += std::log(double(alpha - k + 1)) - std::log(double(k));
    // At q == 1 only k == alpha carries mass; skipping avoids 0 * -inf.
    if (q == 1.0 && k < alpha) continue;
    const double weight = (alpha - k == 0 ? 0.0 : (alpha - k) * log_1mq);
    terms[k] = log_binom + weight + k * log_q +
               double(k) * double(k - 1) * inv_two_var;
  }
  return std::max(0.0, LogSumExp(terms) / (alpha - 1));
}

// Bisection on a monotone predicate over a log-spaced bracket. `ok(hi)` must
// hold; returns the smallest point found that satisfies it.
template <typename Pred>
absl::StatusOr<double> BisectSigma(Pred ok) {
  absl::StatusOr<bool> hi_ok = ok(kSigmaHigh);
  if (!hi_ok.ok()) return hi_ok.status();
  if (!*hi_ok) {
    return absl::OutOfRangeError(absl::StrCat(
        "target epsilon is unreachable with noise multiplier <= ", kSigmaHigh));
  }
  absl::StatusOr<bool> lo_ok = ok(kSigmaLow);
  if (!lo_ok.ok()) return lo_ok.status();
  if (*lo_ok) return kSigmaLow;
  double lo = kSigmaLow, hi = kSigmaHigh;
  while (hi / lo > 1.0 + kCalibrationRelTol) {
    const double mid = std::sqrt(lo * hi);
    absl::StatusOr<bool> mid_ok = ok(mid);
    if (!mid_ok.ok()) return mid_ok.status();
    (*mid_ok ? hi : lo) = mid;
  }
  return hi;
}

absl::Status CheckDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  return absl::OkStatus();
}

}  // namespace

const std::vector<int>& DefaultOrders() {
  static const std::vector<int>* orders = [] {
    auto* v = new std::vector<int>;
    for (int a = 2; a <= 512; ++a) v->push_back(a);
    return v;
  }();
  return *orders;
}

absl::StatusOr<RdpCurve> RdpSubsampledGaussian(double q, double sigma,
                                               const std::vector<int>& orders) {
  if (!(q >= 0.0 && q <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sampling probability must lie in [0, 1], got ", q));
  }
  if (!(sigma >= 0.0)) {
    return absl::InvalidArgumentError("noise multiplier must be non-negative");
  }
  RdpCurve curve;
  curve.orders.reserve(orders.size());
  curve.values.reserve(orders.size());
  for (int alpha : orders) {
    if (alpha < 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("RDP orders must be integers >= 2, got ", alpha));
    }
    curve.orders.push_back(alpha);
    curve.values.push_back(RdpAtOrder(q, sigma, alpha));
  }
  return curve;
}

absl::StatusOr<RdpCurve> Compose(const RdpCurve& curve, std::size_t steps) {
  if (steps < 1) return absl::InvalidArgumentError("steps must be >= 1");
  RdpCurve out = curve;
  for (double& v : out.values) v *= static_cast<double>(steps);
  return out;
}

namespace {

absl::StatusOr<EpsilonAtOrder> MinimizeOverOrders(
    const RdpCurve& curve, double delta,
    double (*convert)(double rdp, double order, double log_delta)) {
  if (absl::Status s = CheckDelta(delta); !s.ok()) return s;
  if (curve.orders.empty() || curve.orders.size() != curve.values.size()) {
    return absl::InvalidArgumentError("RDP curve is empty or malformed");
  }
  const double log_delta = std::log(delta);
  EpsilonAtOrder best{kInf, curve.orders.front()};
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double eps = convert(curve.values[i], curve.orders[i], log_delta);
    if (eps < best.epsilon) best = {eps, curve.orders[i]};
  }
  return best;
}

double ClassicConversion(double rdp, double a, double log_delta) {
  return rdp - log_delta / (a - 1.0);
}

double ImprovedConversion(double rdp, double a, double log_delta) {
  return std::max(
      0.0, rdp + std::log1p(-1.0 / a) - (log_delta + std::log(a)) / (a - 1.0));
}

}  // namespace

absl::StatusOr<EpsilonAtOrder> RdpToEpsilonClassic(const RdpCurve& curve,
                                                   double delta) {
  return MinimizeOverOrders(curve, delta, ClassicConversion);
}

absl::StatusOr<EpsilonAtOrder> RdpToEpsilon(const RdpCurve& curve,
                                            double delta) {
  return MinimizeOverOrders(curve, delta, ImprovedConversion);
}

double AnalyticGaussianDelta(double sigma, double epsilon) {
  const double a = 1.0 / (2.0 * sigma);
  const double b = epsilon * sigma;
  const double tail = Phi(-a - b);
  const double second = tail == 0.0 ? 0.0 : std::exp(epsilon + std::log(tail));
  return Phi(a - b) - second;
}

absl::StatusOr<double> AnalyticGaussianEpsilon(double sigma, double delta) {
  if (absl::Status s = CheckDelta(delta); !s.ok()) return s;
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError("sigma must be positive and finite");
  }
  if (AnalyticGaussianDelta(sigma, 0.0) <= delta) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (AnalyticGaussianDelta(sigma, hi) > delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      return absl::OutOfRangeError(absl::StrCat(
          "no epsilon below 1e6 reaches delta ", delta, " at sigma ", sigma));
    }
  }
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (AnalyticGaussianDelta(sigma, mid) > delta ? lo : hi) = mid;
  }
  return hi;
}

absl::StatusOr<double> CalibrateAnalyticGaussian(double target_epsilon,
                                                 double delta) {
  if (!(target_epsilon > 0.0)) {
    return absl::InvalidArgumentError("target epsilon must be positive");
  }
  return BisectSigma([&](double sigma) -> absl::StatusOr<bool> {
    absl::StatusOr<double> eps = AnalyticGaussianEpsilon(sigma, delta);
    if (!eps.ok()) return eps.status();
    return *eps <= target_epsilon;
  });
}

absl::StatusOr<double> Epsilon(const PrivacySpec& spec) {
  if (absl::Status s = CheckDelta(spec.delta); !s.ok()) return s;
  if (!spec.amplification_valid && spec.sampling_prob < 1.0) {
    return absl::FailedPreconditionError(
        "the batch plan is not Poisson-sampled, so privacy amplification by "
        "subsampling does not apply; account it with sampling probability 1 "
        "or switch to a Poisson batch strategy");
  }
  if (spec.noise_multiplier == 0.0) return kInf;
  absl::StatusOr<RdpCurve> curve = RdpSubsampledGaussian(
      spec.sampling_prob, spec.noise_multiplier, DefaultOrders());
  if (!curve.ok()) return curve.status();
  absl::StatusOr<RdpCurve> composed = Compose(*curve, spec.steps);
  if (!composed.ok()) return composed.status();
  absl::StatusOr<EpsilonAtOrder> eps = RdpToEpsilon(*composed, spec.delta);
  if (!eps.ok()) return eps.status();
  return eps->epsilon;
}

absl::StatusOr<double> CalibrateNoise(double target_epsilon, double delta,
                                      double sampling_prob, std::size_t steps) {
  if (!(target_epsilon > 0.0)) {
    return absl::InvalidArgumentError("target epsilon must be positive");
  }
  return BisectSigma([&](double sigma) -> absl::StatusOr<bool> {
    absl::StatusOr<double> eps =
        Epsilon({delta, sigma, sampling_prob, steps, true});
    if (!eps.ok()) return eps.status();
    return *eps <= target_epsilon;
  });
}

absl::StatusOr<double> MfEpsilon(const Strategy& strategy, double sigma,
                                 double delta, std::size_t steps) {
  if (steps < strategy.band()) {
    return absl::InvalidArgumentError(
        absl::StrCat("matrix factorization accounting needs steps >= band (",
                     strategy.band(), ")"));
  }
  if (sigma == 0.0) return kInf;
  return AnalyticGaussianEpsilon(sigma, delta);
}

absl::StatusOr<double> MfEpsilonForStddev(const Strategy& strategy,
                                          double stddev, double sensitivity,
                                          double delta, std::size_t steps) {
  if (!(sensitivity > 0.0)) {
    return absl::InvalidArgumentError("sensitivity must be positive");
  }
  return MfEpsilon(strategy,
                   stddev / (sensitivity * StrategySensitivity(strategy, steps)),
                   delta, steps);
}

}  // namespace dpcore
