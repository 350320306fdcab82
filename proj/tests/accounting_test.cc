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

#include <cmath>
#include <limits>

#include "gtest/gtest.h"
#include "oracles.h"

namespace dpcore {
namespace {

double Eps(double sigma, double q, std::size_t steps, double delta = 1e-5) {
  PrivacySpec spec;
  spec.noise_multiplier = sigma;
  spec.sampling_prob = q;
  spec.steps = steps;
  spec.delta = delta;
  return *Epsilon(spec);
}

TEST(RdpTest, FullBatchIsPlainGaussian) {
  const std::vector<int> orders = {2, 3, 8, 32, 100};
  for (double sigma : {0.5, 1.0, 4.0}) {
    auto curve = *RdpSubsampledGaussian(1.0, sigma, orders);
    for (std::size_t i = 0; i < orders.size(); ++i) {
      EXPECT_NEAR(curve.values[i], orders[i] / (2 * sigma * sigma),
                  1e-9 * curve.values[i]);
    }
  }
}

TEST(RdpTest, MatchesHighPrecisionSum) {
  for (double q : {0.001, 0.01, 0.1, 0.5}) {
    for (double sigma : {0.6, 1.0, 2.5}) {
      for (int a : {2, 5, 17, 64}) {
        const double got = RdpSubsampledGaussian(q, sigma, {a})->values[0];
        const double want = oracle::RdpSubsampledGaussianExact(q, sigma, a);
        EXPECT_NEAR(got, want, 1e-9 * std::max(1e-12, want))
            << q << " " << sigma << " " << a;
      }
    }
  }
}

TEST(RdpTest, Degenerate) {
  EXPECT_EQ(RdpSubsampledGaussian(0.0, 1.0, {2})->values[0], 0.0);
  EXPECT_TRUE(std::isinf(RdpSubsampledGaussian(0.1, 0.0, {2})->values[0]));
  EXPECT_FALSE(RdpSubsampledGaussian(1.5, 1.0, {2}).ok());
  EXPECT_FALSE(RdpSubsampledGaussian(0.5, -1.0, {2}).ok());
  EXPECT_FALSE(RdpSubsampledGaussian(0.5, 1.0, {1}).ok());
}

TEST(RdpTest, ComposeScales) {
  auto c = *RdpSubsampledGaussian(0.1, 1.0, {2, 4});
  auto c10 = *Compose(c, 10);
  EXPECT_DOUBLE_EQ(c10.values[1], 10 * c.values[1]);
  EXPECT_FALSE(Compose(c, 0).ok());
}

TEST(RdpTest, ClassicConversion) {
  auto e = *RdpToEpsilonClassic(RdpCurve{{2}, {1.0}}, std::exp(-1.0));
  EXPECT_NEAR(e.epsilon, 2.0, 1e-15);
  auto zero = *RdpToEpsilonClassic(RdpCurve{{2, 8, 64}, {0, 0, 0}}, 1e-5);
  EXPECT_NEAR(zero.epsilon, std::log(1e5) / 63, 1e-15);
  EXPECT_EQ(zero.order, 64);
  RdpCurve curve{{2, 10}, {1.0, 0.2}};
  auto best = *RdpToEpsilonClassic(curve, 1e-5);
  EXPECT_NEAR(best.epsilon, 0.2 + std::log(1e5) / 9, 1e-12);
  EXPECT_EQ(best.order, 10);
  EXPECT_FALSE(RdpToEpsilonClassic(curve, 0.0).ok());
  EXPECT_FALSE(RdpToEpsilonClassic(RdpCurve{}, 1e-5).ok());
}

TEST(RdpTest, ImprovedConversion) {
  const double a = 6, rdp = 3, delta = 1e-5;
  auto e = *RdpToEpsilon(RdpCurve{{a}, {rdp}}, delta);
  EXPECT_NEAR(e.epsilon,
              rdp + std::log((a - 1) / a) - (std::log(delta) + std::log(a)) / (a - 1),
              1e-12);
  EXPECT_EQ(RdpToEpsilon(RdpCurve{{2}, {0.0}}, 0.9)->epsilon, 0.0);
  EXPECT_FALSE(RdpToEpsilon(RdpCurve{}, 1e-5).ok());
}

TEST(RdpTest, ImprovedNeverWorseThanClassic) {
  for (double q : {0.01, 0.1, 1.0}) {
    for (double sigma : {0.7, 1.0, 3.0}) {
      std::vector<int> orders = DefaultOrders();
      auto c = *Compose(*RdpSubsampledGaussian(q, sigma, orders), 100);
      for (double delta : {1e-3, 1e-5, 1e-9}) {
        EXPECT_LE(RdpToEpsilon(c, delta)->epsilon,
                  RdpToEpsilonClassic(c, delta)->epsilon);
      }
    }
  }
}

TEST(AnalyticGaussianTest, DeltaMatchesQuadrature) {
  for (double sigma : {0.5, 1.0, 2.0, 5.0}) {
    for (double eps : {0.1, 0.5, 1.0, 3.0}) {
      const double want = oracle::GaussianDeltaByQuadrature(sigma, eps);
      EXPECT_NEAR(AnalyticGaussianDelta(sigma, eps), want, 1e-9 + 1e-6 * want)
          << sigma << " " << eps;
    }
  }
}

TEST(AnalyticGaussianTest, EpsilonInvertsDelta) {
  const double eps = *AnalyticGaussianEpsilon(1.0, 1e-5);
  EXPECT_LE(AnalyticGaussianDelta(1.0, eps), 1e-5 * (1 + 1e-6));
  EXPECT_GT(AnalyticGaussianDelta(1.0, eps * 0.999), 1e-5);
  EXPECT_EQ(*AnalyticGaussianEpsilon(1e3, 0.5), 0.0);
}

TEST(AnalyticGaussianTest, CalibrationHitsTarget) {
  for (double target : {0.5, 1.0, 4.0}) {
    const double sigma = *CalibrateAnalyticGaussian(target, 1e-5);
    const double eps = *AnalyticGaussianEpsilon(sigma, 1e-5);
    EXPECT_LE(eps, target);
    EXPECT_GE(eps, target * 0.999);
  }
}

TEST(EpsilonTest, CloseToAnalyticAtSingleFullStep) {
  for (double sigma : {1.0, 2.0, 5.0}) {
    const double rdp = Eps(sigma, 1.0, 1);
    const double exact = *AnalyticGaussianEpsilon(sigma, 1e-5);
    EXPECT_GE(rdp, exact);
    EXPECT_LE(rdp, 1.15 * exact) << sigma;
  }
}

TEST(EpsilonTest, Monotone) {
  const double base = Eps(1.0, 0.01, 100);
  EXPECT_LT(Eps(1.5, 0.01, 100), base);
  EXPECT_GT(Eps(1.0, 0.02, 100), base);
  EXPECT_GT(Eps(1.0, 0.01, 200), base);
  EXPECT_GT(Eps(1.0, 0.01, 100, 1e-7), base);
}

TEST(EpsilonTest, Golden) {
  constexpr double kGolden = 2.107753075451571;
  EXPECT_NEAR(Eps(1.0, 0.01, 1000), kGolden, 1e-12);
  // Independent recomputation with extended-precision RDP. The optimal order
  // is small, so orders up to 128 suffice.
  double best = std::numeric_limits<double>::infinity();
  for (int a = 2; a <= 128; ++a) {
    const double rdp = 1000 * oracle::RdpSubsampledGaussianExact(0.01, 1.0, a);
    best = std::min(best, rdp + std::log(1.0 - 1.0 / a) -
                              (std::log(1e-5) + std::log(double(a))) / (a - 1));
  }
  EXPECT_NEAR(best, kGolden, 1e-9);
}

TEST(EpsilonTest, ZeroNoiseIsInfinite) {
  EXPECT_EQ(Eps(0.0, 0.01, 100), std::numeric_limits<double>::infinity());
}

TEST(EpsilonTest, AmplificationPolicy) {
  PrivacySpec spec;
  spec.noise_multiplier = 1.0;
  spec.sampling_prob = 0.1;
  spec.amplification_valid = false;
  EXPECT_EQ(Epsilon(spec).status().code(), absl::StatusCode::kFailedPrecondition);
  spec.sampling_prob = 1.0;
  EXPECT_TRUE(Epsilon(spec).ok());
}

TEST(EpsilonTest, InvalidInputs) {
  PrivacySpec spec;
  spec.noise_multiplier = 1.0;
  spec.delta = 0.0;
  EXPECT_FALSE(Epsilon(spec).ok());
  spec.delta = 1e-5;
  spec.steps = 0;
  EXPECT_FALSE(Epsilon(spec).ok());
}

TEST(CalibrateNoiseTest, SafeAndTight) {
  for (double target : {1.0, 8.0}) {
    const double sigma = *CalibrateNoise(target, 1e-5, 0.01, 1000);
    const double eps = Eps(sigma, 0.01, 1000);
    EXPECT_LE(eps, target);
    EXPECT_GE(eps, target * (1 - 1e-3));
  }
}

TEST(CalibrateNoiseTest, FullBatchNearAnalyticSigma) {
  for (double sigma0 : {1.0, 2.0, 4.0}) {
    const double target = *AnalyticGaussianEpsilon(sigma0, 1e-5);
    const double sigma = *CalibrateNoise(target, 1e-5, 1.0, 1);
    EXPECT_GE(sigma, sigma0);
    EXPECT_LE(sigma, 1.15 * sigma0) << sigma0;
  }
}

TEST(CalibrateNoiseTest, LongerRunsNeedMoreNoise) {
  EXPECT_LT(*CalibrateNoise(2.0, 1e-5, 0.01, 100),
            *CalibrateNoise(2.0, 1e-5, 0.01, 1000));
}

TEST(CalibrateNoiseTest, Unreachable) {
  EXPECT_EQ(CalibrateNoise(1e-6, 1e-5, 1.0, 100000).status().code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_FALSE(CalibrateNoise(-1.0, 1e-5, 0.01, 10).ok());
}

TEST(MfEpsilonTest, EqualsGaussianAtNoiseMultiplier) {
  auto s = *Strategy::Create({1.0, 0.4});
  EXPECT_DOUBLE_EQ(*MfEpsilon(s, 2.0, 1e-5, 50), *AnalyticGaussianEpsilon(2.0, 1e-5));
  const double sens = StrategySensitivity(s, 50);
  EXPECT_NEAR(*MfEpsilonForStddev(s, 2.0 * 0.5 * sens, 0.5, 1e-5, 50),
              *MfEpsilon(s, 2.0, 1e-5, 50), 1e-9);
}

}  // namespace
}  // namespace dpcore
