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

#include "dpcore/prng.h"
#include "gtest/gtest.h"

namespace dpcore {
namespace {

GradientVector Vec(const LayoutPtr& layout, std::vector<double> v) {
  return *GradientVector::Create(layout, std::move(v));
}

TEST(SgdTest, NegatedScaledGradient) {
  const LayoutPtr l = Layout::Flat(3);
  auto u = *SgdUpdate(0.1, Vec(l, {1, -2, 0.5}), Vec(l, {9, 9, 9}));
  EXPECT_DOUBLE_EQ(u[0], -0.1);
  EXPECT_DOUBLE_EQ(u[1], 0.2);
  EXPECT_DOUBLE_EQ(u[2], -0.05);
}

TEST(SgdTest, ZeroRateAndLinearMotion) {
  const LayoutPtr l = Layout::Flat(2);
  const GradientVector g = Vec(l, {1, -2});
  EXPECT_EQ(*SgdUpdate(0.0, g, g), GradientVector::Zeros(l));
  GradientVector p = Vec(l, {0, 0});
  for (int i = 0; i < 2; ++i) ASSERT_TRUE(ApplyUpdates(p, *SgdUpdate(0.5, g, p)).ok());
  EXPECT_DOUBLE_EQ(p[0], -1.0);
  EXPECT_DOUBLE_EQ(p[1], 2.0);
}

TEST(SgdTest, LayoutMismatch) {
  EXPECT_FALSE(SgdUpdate(0.1, GradientVector(Layout::Flat(2)),
                         GradientVector(Layout::Flat(3)))
                   .ok());
}

TEST(AdamWTest, FirstStepIsSignTimesLr) {
  const LayoutPtr l = Layout::Flat(3);
  AdamWConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epsilon = 0.0;
  const GradientVector p = Vec(l, {0, 0, 0});
  auto [u, st] = *AdamWUpdate(cfg, Vec(l, {3, -0.001, 7}), AdamWInit(p), p);
  EXPECT_NEAR(u[0], -0.01, 1e-15);
  EXPECT_NEAR(u[1], 0.01, 1e-15);
  EXPECT_NEAR(u[2], -0.01, 1e-15);
  EXPECT_EQ(st.step, 1u);
}

TEST(AdamWTest, TwoStepsByHand) {
  const LayoutPtr l = Layout::Flat(1);
  AdamWConfig cfg{0.1, 0.9, 0.99, 1e-8, 0.5};
  GradientVector p = Vec(l, {2.0});
  OptimizerState st = AdamWInit(p);
  const double g1 = 1.0, g2 = -3.0;
  double m = 0, v = 0, x = 2.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = t == 1 ? g1 : g2;
    m = 0.9 * m + 0.1 * g;
    v = 0.99 * v + 0.01 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.99, t));
    x += -0.1 * (mh / (std::sqrt(vh) + 1e-8) + 0.5 * x);
    auto r = *AdamWUpdate(cfg, Vec(l, {g}), st, p);
    ASSERT_TRUE(ApplyUpdates(p, r.first).ok());
    st = std::move(r.second);
    EXPECT_NEAR(p[0], x, 1e-14) << t;
  }
}

TEST(AdamWTest, UnitStepClosedForm) {
  const LayoutPtr l = Layout::Flat(1);
  AdamWConfig cfg;
  cfg.learning_rate = 1.0;
  const GradientVector p = Vec(l, {0.0});
  auto [u, st] = *AdamWUpdate(cfg, Vec(l, {1.0}), AdamWInit(p), p);
  EXPECT_NEAR(u[0], -1.0 / (1.0 + 1e-8), 1e-15);
}

TEST(AdamWTest, ZeroGradientNoDecayIsStationary) {
  const LayoutPtr l = Layout::Flat(3);
  GradientVector p = Vec(l, {1, 2, 3});
  OptimizerState st = AdamWInit(p);
  for (int i = 0; i < 20; ++i) {
    auto r = *AdamWUpdate(AdamWConfig{}, GradientVector::Zeros(l), st, p);
    EXPECT_EQ(r.first, GradientVector::Zeros(l));
    st = std::move(r.second);
  }
}

TEST(AdamWTest, MatchesScalarAdamReference) {
  const std::size_t d = 5, steps = 50;
  const LayoutPtr l = Layout::Flat(d);
  AdamWConfig cfg;
  cfg.learning_rate = 0.03;
  std::vector<double> grads(d * steps);
  FillGaussian(Seed(4), 1.0, grads);
  GradientVector p = Vec(l, {0.5, -1, 2, 0, 3});
  std::vector<double> x(p.values().begin(), p.values().end()), m(d, 0), v(d, 0);
  OptimizerState st = AdamWInit(p);
  for (std::size_t t = 1; t <= steps; ++t) {
    std::vector<double> g(grads.begin() + (t - 1) * d, grads.begin() + t * d);
    auto r = *AdamWUpdate(cfg, Vec(l, g), st, p);
    ASSERT_TRUE(ApplyUpdates(p, r.first).ok());
    st = std::move(r.second);
    for (std::size_t i = 0; i < d; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, double(t)));
      const double vh = v[i] / (1 - std::pow(0.999, double(t)));
      x[i] -= 0.03 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(p[i], x[i], 1e-12);
}

TEST(AdamWTest, WeightDecayDecoupled) {
  const LayoutPtr l = Layout::Flat(1);
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.2;
  const GradientVector p = Vec(l, {5.0});
  auto [u, st] = *AdamWUpdate(cfg, Vec(l, {0.0}), AdamWInit(p), p);
  EXPECT_NEAR(u[0], -0.1 * 0.2 * 5.0, 1e-15);
}

TEST(AdamWTest, MinimizesQuadratic) {
  const LayoutPtr l = Layout::Flat(2);
  AdamWConfig cfg;
  cfg.learning_rate = 0.05;
  GradientVector p = Vec(l, {3.0, -4.0});
  OptimizerState st = AdamWInit(p);
  for (int i = 0; i < 2000; ++i) {
    // f = (x - 1)^2 + 10 (y + 2)^2
    auto r = *AdamWUpdate(cfg, Vec(l, {2 * (p[0] - 1), 20 * (p[1] + 2)}), st, p);
    ASSERT_TRUE(ApplyUpdates(p, r.first).ok());
    st = std::move(r.second);
  }
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], -2.0, 1e-3);
}

TEST(AdamWTest, StateLayoutMismatch) {
  const GradientVector p(Layout::Flat(2));
  EXPECT_FALSE(AdamWUpdate(AdamWConfig{}, p, AdamWInit(GradientVector(Layout::Flat(3))), p).ok());
}

}  // namespace
}  // namespace dpcore
