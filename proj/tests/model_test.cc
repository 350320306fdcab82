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

#include "dpcore/model.h"

#include <cmath>

#include "dpcore/reference.h"
#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace dpcore {
namespace {

std::vector<ModelSpec> AllModels() {
  return {ModelSpec::Linear(5), ModelSpec::Logistic(5),
          ModelSpec::Mlp(5, 7, Activation::kTanh, LossKind::kLogistic),
          ModelSpec::Mlp(5, 7, Activation::kTanh, LossKind::kSquared),
          ModelSpec::Mlp(5, 7, Activation::kRelu, LossKind::kLogistic)};
}

TEST(ModelTest, LayoutSizes) {
  EXPECT_EQ((*ParamLayout(ModelSpec::Linear(4)))->size(), 5u);
  EXPECT_EQ((*ParamLayout(ModelSpec::Mlp(4, 3, Activation::kRelu,
                                          LossKind::kSquared)))
                ->size(),
            4u * 3 + 3 + 3 + 1);
}

TEST(ModelTest, InvalidSpecs) {
  EXPECT_FALSE(ParamLayout(ModelSpec::Linear(0)).ok());
  EXPECT_FALSE(
      ParamLayout(ModelSpec::Mlp(3, 0, Activation::kRelu, LossKind::kSquared))
          .ok());
}

TEST(ModelTest, InitDeterministicBiasesZero) {
  const ModelSpec m = ModelSpec::Mlp(4, 3, Activation::kTanh, LossKind::kLogistic);
  auto a = *InitParams(m, Seed(1));
  auto b = *InitParams(m, Seed(1));
  EXPECT_EQ(a, b);
  for (double v : a.segment("b1")) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(a.segment("b2")[0], 0.0);
  EXPECT_FALSE(a == *InitParams(m, Seed(2)));
}

TEST(ModelTest, LinearLossByHand) {
  const ModelSpec m = ModelSpec::Linear(2);
  auto p = *GradientVector::Create(*ParamLayout(m), {1.0, -2.0, 0.5});
  Example ex{{3.0, 1.0}, 2.0};
  // prediction 3 - 2 + 0.5 = 1.5, residual -0.5.
  EXPECT_DOUBLE_EQ(*PerExampleLoss(m, p, ex), 0.125);
  auto g = *PerExampleGrad(m, p, ex);
  EXPECT_DOUBLE_EQ(g[0], -1.5);
  EXPECT_DOUBLE_EQ(g[1], -0.5);
  EXPECT_DOUBLE_EQ(g[2], -0.5);
}

TEST(ModelTest, LogisticLossByHand) {
  const ModelSpec m = ModelSpec::Logistic(1);
  auto p = *GradientVector::Create(*ParamLayout(m), {0.0, 0.0});
  Example ex{{1.0}, 1.0};
  EXPECT_NEAR(*PerExampleLoss(m, p, ex), std::log(2.0), 1e-15);
  auto g = *PerExampleGrad(m, p, ex);
  EXPECT_NEAR(g[0], -0.5, 1e-15);
}

TEST(ModelTest, LogisticStableAtExtremeLogits) {
  const ModelSpec m = ModelSpec::Logistic(1);
  auto p = *GradientVector::Create(*ParamLayout(m), {1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(*PerExampleLoss(m, p, Example{{1.0}, 0.0})));
  EXPECT_NEAR(*PerExampleLoss(m, p, Example{{1.0}, 1.0}), 0.0, 1e-300);
  EXPECT_NEAR(*PerExampleLoss(m, p, Example{{-1.0}, 1.0}), 1000.0, 1e-9);
}

TEST(ModelTest, GradientsMatchFiniteDifferences) {
  const PrngKey root = Seed(17);
  for (std::size_t mi = 0; mi < AllModels().size(); ++mi) {
    const ModelSpec m = AllModels()[mi];
    for (std::uint64_t t = 0; t < 10; ++t) {
      const PrngKey k = FoldIn(FoldIn(root, mi), t);
      auto p = *InitParams(m, FoldIn(k, 0));
      // Non-zero biases so their gradients are exercised too.
      std::vector<double> jitter(p.size());
      FillGaussian(FoldIn(k, 1), 0.1, jitter);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] += jitter[i];
      const Example ex = testing::RandomExamples(m, 1, FoldIn(k, 2))[0];
      if (oracle::MinAbsPreActivation(m, p, ex) < 1e-3) continue;
      auto g = *PerExampleGrad(m, p, ex);
      const auto fd = oracle::FiniteDifferenceGrad(m, p, ex);
      EXPECT_LT(oracle::RelativeError(g.values(), fd), 1e-4)
          << "model " << mi << " instance " << t;
    }
  }
}

TEST(ModelTest, DummyExampleContributesNothing) {
  const ModelSpec m = ModelSpec::Logistic(3);
  auto p = *InitParams(m, Seed(1));
  Example dummy;
  dummy.is_dummy = true;
  EXPECT_EQ(*PerExampleLoss(m, p, dummy), 0.0);
  EXPECT_EQ(PerExampleGrad(m, p, dummy)->NormL1(), 0.0);
}

TEST(ModelTest, DimensionMismatchIsError) {
  const ModelSpec m = ModelSpec::Logistic(3);
  auto p = *InitParams(m, Seed(1));
  EXPECT_EQ(PerExampleGrad(m, p, Example{{1.0}, 1.0}).status().code(),
            absl::StatusCode::kInvalidArgument);
  auto wrong = *InitParams(ModelSpec::Logistic(4), Seed(1));
  EXPECT_FALSE(PerExampleLoss(m, wrong, Example{{1, 2, 3}, 1.0}).ok());
}

TEST(ModelTest, NonFiniteInputsPropagate) {
  const ModelSpec m = ModelSpec::Linear(2);
  auto p = *InitParams(m, Seed(1));
  auto g = PerExampleGrad(m, p, Example{{std::nan(""), 1.0}, 1.0});
  ASSERT_TRUE(g.ok());
  EXPECT_FALSE(g->AllFinite());
}

TEST(ModelTest, BatchGradSumMatchesSerialSum) {
  const ModelSpec m = ModelSpec::Mlp(6, 9, Activation::kTanh, LossKind::kSquared);
  auto p = *InitParams(m, Seed(3));
  const auto batch = testing::RandomExamples(m, 300, Seed(4));
  auto par = *BatchGradSum(m, p, batch);
  auto ser = *reference::BatchGradSumSerial(m, p, batch);
  EXPECT_EQ(par, ser);
  GradientVector naive(p.layout());
  for (const Example& ex : batch) {
    ASSERT_TRUE(naive.AddScaled(*PerExampleGrad(m, p, ex)).ok());
  }
  EXPECT_LT(testing::MaxAbsDiff(par.values(), naive.values()), 1e-10);
}

TEST(ModelTest, MeanLossAndPredict) {
  const ModelSpec m = ModelSpec::Linear(1);
  auto p = *GradientVector::Create(*ParamLayout(m), {2.0, 0.0});
  Dataset ds = testing::MakeDataset(m, {Example{{1.0}, 2.0}, Example{{1.0}, 0.0}});
  EXPECT_DOUBLE_EQ(*MeanLoss(m, p, ds), 1.0);
  EXPECT_DOUBLE_EQ(*Predict(m, p, Example{{3.0}, 0.0}), 6.0);
}

}  // namespace
}  // namespace dpcore
