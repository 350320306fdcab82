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

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

// Child key tags under plan.key.
constexpr std::uint64_t kStepTag = 0;
constexpr std::uint64_t kEpochTag = 1;

IndexList Iota(std::size_t n) {
  IndexList out(n);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

IndexList Permutation(std::size_t n, const PrngKey& key) {
  IndexList perm = Iota(n);
  PrngStream stream(key);
  Shuffle(perm, stream);
  return perm;
}

// Keeps each candidate with probability q, in candidate order.
IndexList Bernoulli(const IndexList& candidates, double q, const PrngKey& key) {
  std::vector<double> u(candidates.size());
  FillUniform(key, u);
  IndexList out;
  out.reserve(static_cast<std::size_t>(q * candidates.size() * 1.1) + 4);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (u[i] < q) out.push_back(candidates[i]);
  }
  return out;
}

PrngKey StepKey(const BatchPlan& plan, std::size_t step) {
  return FoldIn(FoldIn(plan.key, kStepTag), step);
}

absl::Status ExpectStrategy(const BatchPlan& plan, BatchStrategy want,
                            const char* name) {
  if (plan.strategy != want) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch plan strategy is not ", name));
  }
  return absl::OkStatus();
}

}  // namespace

std::size_t CyclicEpochLength(double sampling_prob) {
  if (sampling_prob <= 0.0) return 1;
  return static_cast<std::size_t>(std::ceil(1.0 / sampling_prob));
}

absl::Status ValidatePlan(const BatchPlan& plan) {
  if (plan.iterations < 1) {
    return absl::InvalidArgumentError("iterations must be at least 1");
  }
  switch (plan.strategy) {
    case BatchStrategy::kPoisson:
    case BatchStrategy::kCyclicPoisson:
    case BatchStrategy::kTruncatedPoisson:
      if (!(plan.sampling_prob >= 0.0 && plan.sampling_prob <= 1.0)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "sampling probability must lie in [0, 1], got ",
            plan.sampling_prob));
      }
      if (plan.strategy == BatchStrategy::kTruncatedPoisson &&
          !plan.max_batch_size.has_value()) {
        return absl::InvalidArgumentError(
            "truncated Poisson sampling needs max_batch_size");
      }
      return absl::OkStatus();
    case BatchStrategy::kShuffledFixed:
      if (plan.batch_size < 1 || plan.batch_size > plan.dataset_size) {
        return absl::InvalidArgumentError(
            absl::StrCat("batch size must lie in [1, n] = [1, ",
                         plan.dataset_size, "], got ", plan.batch_size));
      }
      return absl::OkStatus();
  }
  return absl::InvalidArgumentError("unknown batch strategy");
}

PlanMetadata DescribePlan(const BatchPlan& plan) {
  PlanMetadata meta;
  if (plan.strategy == BatchStrategy::kShuffledFixed) {
    meta.amplification_valid = false;
    meta.warning =
        "shuffled fixed-size batches do not satisfy the Poisson sampling "
        "assumption; amplified privacy accounting is invalid for this plan";
    meta.expected_batch_size = static_cast<double>(plan.batch_size);
    return meta;
  }
  meta.amplification_valid = true;
  meta.expected_batch_size =
      plan.sampling_prob * static_cast<double>(plan.dataset_size);
  if (plan.strategy == BatchStrategy::kTruncatedPoisson) {
    meta.warning =
        "truncation is not reflected in the privacy accounting; the reported "
        "epsilon assumes untruncated Poisson sampling";
  }
  return meta;
}

std::vector<IndexList> CyclicEpochShards(const BatchPlan& plan,
                                         std::size_t epoch) {
  const std::size_t n = plan.dataset_size;
  const std::size_t shards = CyclicEpochLength(plan.sampling_prob);
  const IndexList perm = Permutation(n, FoldIn(FoldIn(plan.key, kEpochTag), epoch));
  std::vector<IndexList> out(shards);
  for (std::size_t j = 0; j < shards; ++j) {
    const std::size_t begin = j * n / shards;
    const std::size_t end = (j + 1) * n / shards;
    out[j].assign(perm.begin() + begin, perm.begin() + end);
  }
  return out;
}

absl::StatusOr<BatchIterator> BatchIterator::Create(BatchPlan plan) {
  if (absl::Status s = ValidatePlan(plan); !s.ok()) return s;
  return BatchIterator(std::move(plan));
}

std::optional<IndexList> BatchIterator::Next() {
  if (step_ >= plan_.iterations) return std::nullopt;
  return BatchAt(step_++);
}

IndexList BatchIterator::BatchAt(std::size_t step) const {
  const std::size_t n = plan_.dataset_size;
  const double q = plan_.sampling_prob;
  const PrngKey step_key = StepKey(plan_, step);
  switch (plan_.strategy) {
    case BatchStrategy::kPoisson:
      return Bernoulli(Iota(n), q, step_key);
    case BatchStrategy::kTruncatedPoisson:
      return Truncate(Bernoulli(Iota(n), q, FoldIn(step_key, 0)),
                      *plan_.max_batch_size, FoldIn(step_key, 1));
    case BatchStrategy::kCyclicPoisson: {
      const std::size_t length = CyclicEpochLength(q);
      const std::vector<IndexList> shards =
          CyclicEpochShards(plan_, step / length);
      return Bernoulli(shards[step % length], q, step_key);
    }
    case BatchStrategy::kShuffledFixed: {
      const std::size_t per_epoch = n / plan_.batch_size;
      const std::size_t epoch = step / per_epoch;
      const std::size_t j = step % per_epoch;
      const IndexList perm =
          Permutation(n, FoldIn(FoldIn(plan_.key, kEpochTag), epoch));
      return IndexList(perm.begin() + j * plan_.batch_size,
                       perm.begin() + (j + 1) * plan_.batch_size);
    }
  }
  return {};
}

absl::StatusOr<BatchIterator> PoissonBatches(const BatchPlan& plan) {
  if (absl::Status s = ExpectStrategy(plan, BatchStrategy::kPoisson, "poisson");
      !s.ok()) {
    return s;
  }
  return BatchIterator::Create(plan);
}

absl::StatusOr<BatchIterator> CyclicPoissonBatches(const BatchPlan& plan) {
  if (absl::Status s = ExpectStrategy(plan, BatchStrategy::kCyclicPoisson,
                                      "cyclic-poisson");
      !s.ok()) {
    return s;
  }
  return BatchIterator::Create(plan);
}

absl::StatusOr<BatchIterator> ShuffledFixedBatches(const BatchPlan& plan) {
  if (absl::Status s = ExpectStrategy(plan, BatchStrategy::kShuffledFixed,
                                      "shuffled-fixed");
      !s.ok()) {
    return s;
  }
  return BatchIterator::Create(plan);
}

IndexList Truncate(const IndexList& batch, std::size_t max_size,
                   const PrngKey& key) {
  if (batch.size() <= max_size) return batch;
  std::vector<std::size_t> positions(batch.size());
  std::iota(positions.begin(), positions.end(), 0);
  PrngStream stream(key);
  // Partial Fisher-Yates: the first max_size slots are a uniform subset.
  for (std::size_t i = 0; i < max_size; ++i) {
    const std::size_t j = i + stream.NextBelow(positions.size() - i);
    std::swap(positions[i], positions[j]);
  }
  positions.resize(max_size);
  std::sort(positions.begin(), positions.end());
  IndexList out;
  out.reserve(max_size);
  for (std::size_t p : positions) out.push_back(batch[p]);
  return out;
}

std::size_t PaddedBatch::real_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

absl::StatusOr<PaddedBatch> PadBatch(const IndexList& indices,
                                     const std::vector<std::size_t>& buckets) {
  if (buckets.empty()) {
    return absl::InvalidArgumentError("bucket sizes must not be empty");
  }
  for (std::size_t i = 1; i < buckets.size(); ++i) {
    if (buckets[i] <= buckets[i - 1]) {
      return absl::InvalidArgumentError("bucket sizes must be strictly ascending");
    }
  }
  auto fit = std::lower_bound(buckets.begin(), buckets.end(), indices.size());
  if (fit == buckets.end()) {
    return absl::OutOfRangeError(
        absl::StrCat("batch of ", indices.size(),
                     " exceeds the largest bucket ", buckets.back(),
                     "; truncate the batch or add a larger bucket"));
  }
  PaddedBatch out;
  out.indices = indices;
  out.indices.resize(*fit, kDummyIndex);
  out.mask.assign(*fit, false);
  std::fill(out.mask.begin(), out.mask.begin() + indices.size(), true);
  return out;
}

std::vector<Example> GatherBatch(const Dataset& dataset,
                                 const PaddedBatch& padded) {
  std::vector<Example> out;
  out.reserve(padded.indices.size());
  for (std::size_t i = 0; i < padded.indices.size(); ++i) {
    if (!padded.mask[i] || padded.indices[i] == kDummyIndex) {
      Example dummy;
      dummy.features.assign(dataset.feature_dim, 0.0);
      dummy.is_dummy = true;
      out.push_back(std::move(dummy));
      continue;
    }
    out.push_back(dataset.examples[padded.indices[i]]);
  }
  return out;
}

std::vector<Example> GatherBatch(const Dataset& dataset,
                                 const IndexList& indices) {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (std::int64_t i : indices) out.push_back(dataset.examples[i]);
  return out;
}

}  // namespace dpcore
