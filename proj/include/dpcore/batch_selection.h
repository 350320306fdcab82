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

#ifndef DPCORE_BATCH_SELECTION_H_
#define DPCORE_BATCH_SELECTION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/model.h"
#include "dpcore/prng.h"

namespace dpcore {

// Batch selection works on indices only; callers map indices to examples.
using IndexList = std::vector<std::int64_t>;

inline constexpr std::int64_t kDummyIndex = -1;

enum class BatchStrategy {
  kPoisson,
  kCyclicPoisson,
  kShuffledFixed,
  kTruncatedPoisson,
};

struct BatchPlan {
  BatchStrategy strategy = BatchStrategy::kPoisson;
  std::size_t dataset_size = 0;
  // Poisson variants.
  double sampling_prob = 0.0;
  // Shuffled-fixed.
  std::size_t batch_size = 0;
  std::size_t iterations = 1;
  // Truncated-Poisson cap.
  std::optional<std::size_t> max_batch_size;
  PrngKey key;
};

struct PlanMetadata {
  // True when every example is included independently at each step, which is
  // what amplification-by-subsampling accounting assumes.
  bool amplification_valid = false;
  // Non-empty for strategies whose privacy accounting must not use q < 1.
  std::string warning;
  // q*n for Poisson variants, B for fixed-size batches. Used to normalize the
  // noisy gradient sum.
  double expected_batch_size = 0.0;
};

absl::Status ValidatePlan(const BatchPlan& plan);
PlanMetadata DescribePlan(const BatchPlan& plan);

// Steps in one cyclic-Poisson epoch: ceil(1/q), and 1 when q == 0.
std::size_t CyclicEpochLength(double sampling_prob);

// Yields exactly plan.iterations batches, each a pure function of
// (plan, step). Multiple iterators over one plan yield identical sequences.
class BatchIterator {
 public:
  static absl::StatusOr<BatchIterator> Create(BatchPlan plan);

  // nullopt once all iterations have been produced.
  std::optional<IndexList> Next();
  // Random access to the batch of any step < iterations.
  IndexList BatchAt(std::size_t step) const;

  std::size_t step() const { return step_; }
  const BatchPlan& plan() const { return plan_; }
  const PlanMetadata& metadata() const { return metadata_; }

 private:
  explicit BatchIterator(BatchPlan plan)
      : plan_(std::move(plan)), metadata_(DescribePlan(plan_)) {}

  BatchPlan plan_;
  PlanMetadata metadata_;
  std::size_t step_ = 0;
};

// Strategy-checked constructors.
absl::StatusOr<BatchIterator> PoissonBatches(const BatchPlan& plan);
absl::StatusOr<BatchIterator> CyclicPoissonBatches(const BatchPlan& plan);
absl::StatusOr<BatchIterator> ShuffledFixedBatches(const BatchPlan& plan);

// Shards of cyclic-Poisson epoch `epoch`: a fresh permutation of [0, n) cut
// into CyclicEpochLength(q) contiguous, balanced pieces. Step j of the epoch
// Poisson-samples shard j with probability q.
std::vector<IndexList> CyclicEpochShards(const BatchPlan& plan,
                                         std::size_t epoch);

// Identity when batch.size() <= max_size, otherwise a uniformly random subset
// of exactly max_size elements kept in their original order.
IndexList Truncate(const IndexList& batch, std::size_t max_size,
                   const PrngKey& key);

struct PaddedBatch {
  // Dummy slots hold kDummyIndex.
  IndexList indices;
  // true = real example.
  std::vector<bool> mask;

  std::size_t real_count() const;
};

// Pads to the smallest bucket that fits. Buckets must be non-empty and
// strictly ascending (InvalidArgument); a batch larger than the largest bucket
// is OutOfRange.
absl::StatusOr<PaddedBatch> PadBatch(const IndexList& indices,
                                     const std::vector<std::size_t>& buckets);

// Materializes a padded batch; dummy slots become `dummy` with is_dummy set.
std::vector<Example> GatherBatch(const Dataset& dataset,
                                 const PaddedBatch& padded);
std::vector<Example> GatherBatch(const Dataset& dataset,
                                 const IndexList& indices);

}  // namespace dpcore

#endif  // DPCORE_BATCH_SELECTION_H_
