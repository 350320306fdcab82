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

#include "dpcore/batch_selection.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dpcore/clipping.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpcore {
namespace {

using ::testing::ElementsAre;

// Two-sided 99.9% normal quantile.
constexpr double kZ999 = 3.2905;
// Two-sided 99% normal quantile.
constexpr double kZ99 = 2.5758;

BatchPlan Plan(BatchStrategy s, std::size_t n, double q, std::size_t t,
               std::uint64_t seed = 1) {
  BatchPlan p;
  p.strategy = s;
  p.dataset_size = n;
  p.sampling_prob = q;
  p.iterations = t;
  p.key = Seed(seed);
  return p;
}

std::vector<IndexList> Drain(BatchIterator it) {
  std::vector<IndexList> out;
  while (auto b = it.Next()) out.push_back(*b);
  return out;
}

IndexList Iota(std::size_t n) {
  IndexList v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(PoissonTest, DegenerateProbabilities) {
  for (const IndexList& b : Drain(*PoissonBatches(Plan(BatchStrategy::kPoisson, 7, 1.0, 3)))) {
    EXPECT_EQ(b, Iota(7));
  }
  for (const IndexList& b : Drain(*PoissonBatches(Plan(BatchStrategy::kPoisson, 7, 0.0, 3)))) {
    EXPECT_TRUE(b.empty());
  }
}

TEST(PoissonTest, YieldsExactlyTBatches) {
  EXPECT_EQ(Drain(*PoissonBatches(Plan(BatchStrategy::kPoisson, 50, 0.1, 17))).size(), 17u);
}

TEST(PoissonTest, BadProbabilityRejected) {
  EXPECT_EQ(PoissonBatches(Plan(BatchStrategy::kPoisson, 5, 1.5, 1)).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(PoissonBatches(Plan(BatchStrategy::kPoisson, 5, -0.1, 1)).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(PoissonBatches(Plan(BatchStrategy::kPoisson, 5, 0.5, 0)).ok());
}

TEST(PoissonTest, WrongStrategyRejected) {
  EXPECT_FALSE(PoissonBatches(Plan(BatchStrategy::kCyclicPoisson, 5, 0.5, 1)).ok());
  EXPECT_FALSE(CyclicPoissonBatches(Plan(BatchStrategy::kPoisson, 5, 0.5, 1)).ok());
}

TEST(PoissonTest, InclusionRateWithinBinomialBand) {
  const std::size_t n = 1000, t = 1000;
  const double q = 0.01;
  auto it = *PoissonBatches(Plan(BatchStrategy::kPoisson, n, q, t, 5));
  std::size_t total = 0;
  for (const IndexList& b : Drain(it)) {
    total += b.size();
    EXPECT_TRUE(std::is_sorted(b.begin(), b.end()));
  }
  const double trials = double(n) * t;
  const double rate = total / trials;
  EXPECT_NEAR(rate, q, kZ999 * std::sqrt(q * (1 - q) / trials));
}

TEST(PoissonTest, StepsUncorrelated) {
  const std::size_t n = 200, t = 2000;
  const double q = 0.3;
  auto batches = Drain(*PoissonBatches(Plan(BatchStrategy::kPoisson, n, q, t, 9)));
  // Covariance of the inclusion indicator of a fixed index between
  // consecutive steps, pooled over indices.
  std::vector<std::vector<bool>> in(t, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < t; ++s) {
    for (auto i : batches[s]) in[s][i] = true;
  }
  double cov = 0.0;
  std::size_t pairs = 0;
  for (std::size_t s = 0; s + 1 < t; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      cov += (in[s][i] - q) * (in[s + 1][i] - q);
      ++pairs;
    }
  }
  cov /= pairs;
  EXPECT_NEAR(cov, 0.0, kZ999 * q * (1 - q) / std::sqrt(double(pairs)));
}

TEST(BatchIteratorTest, DeterministicAndRandomAccess) {
  for (BatchStrategy s : {BatchStrategy::kPoisson, BatchStrategy::kCyclicPoisson}) {
    auto a = Drain(*BatchIterator::Create(Plan(s, 100, 0.1, 25, 3)));
    auto b = Drain(*BatchIterator::Create(Plan(s, 100, 0.1, 25, 3)));
    EXPECT_EQ(a, b);
    auto it = *BatchIterator::Create(Plan(s, 100, 0.1, 25, 3));
    EXPECT_EQ(it.BatchAt(13), a[13]);
    EXPECT_NE(a, Drain(*BatchIterator::Create(Plan(s, 100, 0.1, 25, 4))));
  }
}

TEST(CyclicPoissonTest, QOneGivesPermutations) {
  auto batches = Drain(*CyclicPoissonBatches(Plan(BatchStrategy::kCyclicPoisson, 20, 1.0, 3)));
  for (IndexList b : batches) {
    std::sort(b.begin(), b.end());
    EXPECT_EQ(b, Iota(20));
  }
  EXPECT_NE(batches[0], batches[1]);
}

TEST(CyclicPoissonTest, ShardsPartitionEachEpoch) {
  const BatchPlan plan = Plan(BatchStrategy::kCyclicPoisson, 100, 0.1, 10);
  EXPECT_EQ(CyclicEpochLength(0.1), 10u);
  for (std::size_t epoch = 0; epoch < 3; ++epoch) {
    auto shards = CyclicEpochShards(plan, epoch);
    ASSERT_EQ(shards.size(), 10u);
    IndexList all;
    for (const IndexList& s : shards) {
      EXPECT_EQ(s.size(), 10u);
      all.insert(all.end(), s.begin(), s.end());
    }
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, Iota(100));
  }
}

TEST(CyclicPoissonTest, BatchesDrawnFromTheirShard) {
  const BatchPlan plan = Plan(BatchStrategy::kCyclicPoisson, 100, 0.1, 20);
  auto batches = Drain(*CyclicPoissonBatches(plan));
  for (std::size_t t = 0; t < 20; ++t) {
    const IndexList shard = CyclicEpochShards(plan, t / 10)[t % 10];
    const std::set<std::int64_t> allowed(shard.begin(), shard.end());
    for (auto i : batches[t]) EXPECT_TRUE(allowed.count(i));
  }
}

TEST(CyclicPoissonTest, EpochLength) {
  EXPECT_EQ(CyclicEpochLength(1.0), 1u);
  EXPECT_EQ(CyclicEpochLength(0.3), 4u);
  EXPECT_EQ(CyclicEpochLength(0.0), 1u);
}

TEST(ShuffledFixedTest, SmallPartition) {
  BatchPlan p = Plan(BatchStrategy::kShuffledFixed, 6, 0.0, 2);
  p.batch_size = 3;
  auto batches = Drain(*ShuffledFixedBatches(p));
  ASSERT_EQ(batches.size(), 2u);
  IndexList all = batches[0];
  all.insert(all.end(), batches[1].begin(), batches[1].end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, Iota(6));
}

TEST(ShuffledFixedTest, FullBatchIsPermutation) {
  BatchPlan p = Plan(BatchStrategy::kShuffledFixed, 9, 0.0, 2);
  p.batch_size = 9;
  for (IndexList b : Drain(*ShuffledFixedBatches(p))) {
    std::sort(b.begin(), b.end());
    EXPECT_EQ(b, Iota(9));
  }
}

TEST(ShuffledFixedTest, EpochCoversEachIndexOnce) {
  BatchPlan p = Plan(BatchStrategy::kShuffledFixed, 10000, 0.0, 100);
  p.batch_size = 100;
  std::vector<int> counts(10000, 0);
  for (const IndexList& b : Drain(*ShuffledFixedBatches(p))) {
    EXPECT_EQ(b.size(), 100u);
    for (auto i : b) ++counts[i];
  }
  for (int c : counts) EXPECT_EQ(c, 1);
}

TEST(ShuffledFixedTest, PartialBatchDropped) {
  BatchPlan p = Plan(BatchStrategy::kShuffledFixed, 7, 0.0, 4);
  p.batch_size = 3;
  auto batches = Drain(*ShuffledFixedBatches(p));
  for (const IndexList& b : batches) EXPECT_EQ(b.size(), 3u);
}

TEST(ShuffledFixedTest, BadBatchSizeAndMetadata) {
  BatchPlan p = Plan(BatchStrategy::kShuffledFixed, 5, 0.0, 1);
  p.batch_size = 6;
  EXPECT_EQ(ShuffledFixedBatches(p).status().code(),
            absl::StatusCode::kInvalidArgument);
  p.batch_size = 5;
  const PlanMetadata meta = DescribePlan(p);
  EXPECT_FALSE(meta.amplification_valid);
  EXPECT_FALSE(meta.warning.empty());
  EXPECT_EQ(meta.expected_batch_size, 5.0);
}

TEST(PlanMetadataTest, PoissonVariantsAmplify) {
  for (BatchStrategy s : {BatchStrategy::kPoisson, BatchStrategy::kCyclicPoisson,
                          BatchStrategy::kTruncatedPoisson}) {
    BatchPlan p = Plan(s, 200, 0.05, 1);
    p.max_batch_size = 20;
    const PlanMetadata meta = DescribePlan(p);
    EXPECT_TRUE(meta.amplification_valid);
    EXPECT_DOUBLE_EQ(meta.expected_batch_size, 10.0);
  }
}

TEST(TruncateTest, Identity) {
  const IndexList b = {4, 1, 9};
  EXPECT_EQ(Truncate(b, 5, Seed(1)), b);
  EXPECT_EQ(Truncate(b, 3, Seed(1)), b);
}

TEST(TruncateTest, ToZero) {
  EXPECT_TRUE(Truncate({1, 2, 3, 4, 5}, 0, Seed(1)).empty());
}

TEST(TruncateTest, UniformRetention) {
  const IndexList b = Iota(100);
  const int trials = 10000;
  std::vector<int> kept(100, 0);
  for (int t = 0; t < trials; ++t) {
    const IndexList out = Truncate(b, 10, FoldIn(Seed(2), t));
    ASSERT_EQ(out.size(), 10u);
    EXPECT_TRUE(std::is_sorted(out.begin(), out.end()));
    for (auto i : out) ++kept[i];
  }
  const double band = kZ99 * std::sqrt(0.1 * 0.9 / trials);
  int outside = 0;
  for (int k : kept) outside += std::abs(k / double(trials) - 0.1) > band;
  // About 1 in 100 elements may leave a 99% band; allow a generous margin.
  EXPECT_LE(outside, 6);
}

TEST(TruncateTest, TruncatedPoissonRespectsCap) {
  BatchPlan p = Plan(BatchStrategy::kTruncatedPoisson, 500, 0.2, 30);
  p.max_batch_size = 50;
  for (const IndexList& b : Drain(*BatchIterator::Create(p))) {
    EXPECT_LE(b.size(), 50u);
  }
  p.max_batch_size.reset();
  EXPECT_FALSE(BatchIterator::Create(p).ok());
}

TEST(PadBatchTest, SmallestFit) {
  auto p = *PadBatch({4, 9, 2}, {4, 8});
  EXPECT_THAT(p.indices, ElementsAre(4, 9, 2, kDummyIndex));
  EXPECT_THAT(p.mask, ElementsAre(true, true, true, false));
  EXPECT_EQ(p.real_count(), 3u);
}

TEST(PadBatchTest, EmptyBatch) {
  auto p = *PadBatch({}, {4});
  EXPECT_THAT(p.indices, ElementsAre(-1, -1, -1, -1));
  EXPECT_EQ(p.real_count(), 0u);
}

TEST(PadBatchTest, NextBucket) {
  auto p = *PadBatch({1, 2, 3, 4, 5}, {4, 8});
  EXPECT_EQ(p.indices.size(), 8u);
  EXPECT_EQ(std::count(p.indices.begin(), p.indices.end(), kDummyIndex), 3);
}

TEST(PadBatchTest, Errors) {
  EXPECT_EQ(PadBatch({1, 2, 3}, {2}).status().code(), absl::StatusCode::kOutOfRange);
  EXPECT_EQ(PadBatch({1}, {}).status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(PadBatch({1}, {4, 4}).status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(PadBatchTest, PaddingDoesNotChangeClippedSum) {
  const ModelSpec m = ModelSpec::Logistic(3);
  const Dataset ds = testing::MakeDataset(m, testing::RandomExamples(m, 40, Seed(3)));
  const auto params = *InitParams(m, Seed(4));
  auto it = *PoissonBatches(Plan(BatchStrategy::kPoisson, 40, 0.3, 5, 8));
  while (auto idx = it.Next()) {
    auto padded = *PadBatch(*idx, {8, 16, 32, 64});
    auto a = *ClippedGradSum(m, params, GatherBatch(ds, *idx), ClipConfig{});
    auto b = *ClippedGradSum(m, params, GatherBatch(ds, padded), ClipConfig{});
    EXPECT_EQ(a.sum, b.sum);
    EXPECT_EQ(a.contributing_count, b.contributing_count);
  }
}

}  // namespace
}  // namespace dpcore
