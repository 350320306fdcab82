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

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace dpcore {
namespace {

ClippedGradientSum ZeroSum(const LayoutPtr& layout, double sensitivity) {
  ClippedGradientSum s;
  s.sum = GradientVector::Zeros(layout);
  s.sensitivity = sensitivity;
  return s;
}

// Runs `steps` privatizations of zero sums and returns the outputs.
std::vector<GradientVector> NoiseTrace(const Privatizer& p,
                                       const LayoutPtr& layout,
                                       const PrngKey& key, std::size_t steps) {
  PrivatizerState state = *InitPrivatizer(p, layout, key);
  std::vector<GradientVector> out;
  for (std::size_t t = 0; t < steps; ++t) {
    auto [noisy, next] = *Privatize(p, ZeroSum(layout, p.sensitivity()), state);
    out.push_back(std::move(noisy));
    state = std::move(next);
  }
  return out;
}

TEST(GaussianPrivatizerTest, NoiseIsCalibratedGaussian) {
  const double sigma = 1.3, c = 0.7;
  auto p = *Privatizer::Gaussian(sigma, c);
  EXPECT_DOUBLE_EQ(p.stddev(), sigma * c);
  const LayoutPtr layout = Layout::Flat(4000);
  auto trace = NoiseTrace(p, layout, Seed(11), 3);
  std::vector<double> all;
  for (const auto& g : trace) all.insert(all.end(), g.values().begin(), g.values().end());
  const double pv = testing::KsPValue(
      all, [&](double x) { return testing::NormalCdf(x, sigma * c); });
  EXPECT_GT(pv, 1e-3);
  // Independent steps.
  EXPECT_NE(trace[0], trace[1]);
}

TEST(GaussianPrivatizerTest, AddsNoiseToSum) {
  auto p = *Privatizer::Gaussian(0.5, 1.0);
  const LayoutPtr layout = Layout::Flat(5);
  ClippedGradientSum s;
  s.sum = *GradientVector::Create(layout, {1, 2, 3, 4, 5});
  s.sensitivity = 1.0;
  auto [noisy, state] = *Privatize(p, s, *InitPrivatizer(p, layout, Seed(2)));
  auto noise_only = NoiseTrace(p, layout, Seed(2), 1)[0];
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(noisy[i], s.sum[i] + noise_only[i]);
  }
  EXPECT_EQ(state.step, 1u);
}

TEST(GaussianPrivatizerTest, ZeroNoiseIsIdentity) {
  auto p = *Privatizer::Gaussian(0.0, 1.0);
  const LayoutPtr layout = Layout::Flat(3);
  ClippedGradientSum s;
  s.sum = *GradientVector::Create(layout, {0.1, -0.2, 0.3});
  s.sensitivity = 1.0;
  auto [noisy, state] = *Privatize(p, s, *InitPrivatizer(p, layout, Seed(2)));
  EXPECT_EQ(noisy, s.sum);
}

TEST(GaussianPrivatizerTest, EmptyBatchStillNoised) {
  auto p = *Privatizer::Gaussian(1.0, 1.0);
  const LayoutPtr layout = Layout::Flat(16);
  auto trace = NoiseTrace(p, layout, Seed(5), 2);
  EXPECT_GT(trace[0].NormL2(), 0.0);
  EXPECT_TRUE(trace[0].AllFinite());
}

TEST(GaussianPrivatizerTest, SensitivityMismatchRejected) {
  auto p = *Privatizer::Gaussian(1.0, 1.0);
  const LayoutPtr layout = Layout::Flat(3);
  auto result = Privatize(p, ZeroSum(layout, 2.0), *InitPrivatizer(p, layout, Seed(1)));
  EXPECT_EQ(result.status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(GaussianPrivatizerTest, LayoutMismatchRejected) {
  auto p = *Privatizer::Gaussian(1.0, 1.0);
  auto result = Privatize(p, ZeroSum(Layout::Flat(4), 1.0),
                          *InitPrivatizer(p, Layout::Flat(3), Seed(1)));
  EXPECT_FALSE(result.ok());
}

TEST(GaussianPrivatizerTest, BadParametersRejected) {
  EXPECT_FALSE(Privatizer::Gaussian(-1.0, 1.0).ok());
  EXPECT_FALSE(Privatizer::Gaussian(1.0, 0.0).ok());
  EXPECT_FALSE(Privatizer::Gaussian(NAN, 1.0).ok());
  EXPECT_FALSE(Privatizer::BandedWithStddev(1.0, 1.0, {}).ok());
  EXPECT_FALSE(Privatizer::BandedWithStddev(1.0, 1.0, {0.0, 1.0}).ok());
}

TEST(BandedPrivatizerTest, BandOneMatchesGaussianBitwise) {
  auto g = *Privatizer::Gaussian(1.1, 0.9);
  auto b = *Privatizer::BandedWithStddev(1.1 * 0.9, 0.9, {1.0});
  const LayoutPtr layout = Layout::Flat(33);
  auto tg = NoiseTrace(g, layout, Seed(7), 6);
  auto tb = NoiseTrace(b, layout, Seed(7), 6);
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(tg[t], tb[t]);
}

TEST(BandedPrivatizerTest, MatchesDenseTriangularSolve) {
  const std::vector<double> c = {1.0, -0.45, 0.2, 0.05};
  const std::size_t n = 24, d = 7;
  const double stddev = 0.8;
  auto banded = *Privatizer::BandedWithStddev(stddev, 1.0, c);
  auto fresh = *Privatizer::Gaussian(stddev, 1.0);
  const LayoutPtr layout = Layout::Flat(d);
  auto tz = NoiseTrace(fresh, layout, Seed(3), n);
  auto tb = NoiseTrace(banded, layout, Seed(3), n);
  Eigen::MatrixXd z(n, d);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < d; ++i) z(t, i) = tz[t][i];
  const Eigen::MatrixXd want = oracle::DenseCorrelatedNoise(c, z);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(tb[t][i], want(t, i), 1e-10);
}

TEST(BandedPrivatizerTest, HistoryBounded) {
  auto p = *Privatizer::BandedWithStddev(1.0, 1.0, {1.0, 0.5, 0.25});
  const LayoutPtr layout = Layout::Flat(2);
  PrivatizerState state = *InitPrivatizer(p, layout, Seed(1));
  for (std::size_t t = 0; t < 10; ++t) {
    state = Privatize(p, ZeroSum(layout, 1.0), state)->second;
    EXPECT_EQ(state.history.size(), std::min<std::size_t>(t + 1, 2));
  }
}

TEST(BandedPrivatizerTest, DeterministicTransition) {
  auto p = *Privatizer::BandedWithStddev(1.0, 1.0, {1.0, 0.3});
  const LayoutPtr layout = Layout::Flat(5);
  PrivatizerState s0 = *InitPrivatizer(p, layout, Seed(9));
  auto a = *Privatize(p, ZeroSum(layout, 1.0), s0);
  auto b = *Privatize(p, ZeroSum(layout, 1.0), s0);
  EXPECT_EQ(a.first, b.first);
  EXPECT_TRUE(a.second == b.second);
}

TEST(BandedPrivatizerTest, StrategyScalesBySensitivity) {
  auto s = *Strategy::Create({1.0, 0.5, 0.5});
  auto p = *Privatizer::BandedForStrategy(2.0, 0.5, s, 10);
  EXPECT_NEAR(p.stddev(), 2.0 * 0.5 * std::sqrt(1.5), 1e-15);
  // Fewer steps than the band truncate the column.
  auto short_run = *Privatizer::BandedForStrategy(2.0, 0.5, s, 1);
  EXPECT_DOUBLE_EQ(short_run.stddev(), 1.0);
}

}  // namespace
}  // namespace dpcore
