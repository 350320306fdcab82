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

#ifndef DPCORE_PRNG_H_
#define DPCORE_PRNG_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcore/gradient_vector.h"

namespace dpcore {

// Philox4x64-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Bijective in `counter` for a fixed key.
std::array<std::uint64_t, 4> Philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

// Immutable 256-bit key. The first two words key the Philox permutation and
// the last two are a stream nonce folded into every counter, so a key names an
// infinite, randomly addressable stream of 64-bit words.
//
// Splitting is O(1): child i is the Philox image of (i, kDeriveDomain, nonce)
// under the parent key. Children of one parent are pairwise distinct because
// the block function is a permutation of the counter. By convention a key is
// not used for generation after it has been split.
class PrngKey {
 public:
  using Words = std::array<std::uint64_t, 4>;

  PrngKey() = default;
  PrngKey(Words words, std::vector<std::uint64_t> lineage)
      : words_(words), lineage_(std::move(lineage)) {}

  const Words& words() const { return words_; }
  // Split indices from the root seed to this key. Diagnostics only.
  const std::vector<std::uint64_t>& lineage() const { return lineage_; }

  // Block `index` (four words) of this key's output stream.
  std::array<std::uint64_t, 4> Block(std::uint64_t index) const;

  // Keys compare by seed material; lineage is ignored.
  bool operator==(const PrngKey& other) const { return words_ == other.words_; }

 private:
  Words words_{};
  std::vector<std::uint64_t> lineage_;
};

PrngKey Seed(std::uint64_t seed);

// Child `index` of `key`. Split(key, n)[i] == FoldIn(key, i).
PrngKey FoldIn(const PrngKey& key, std::uint64_t index);

// n >= 1, otherwise InvalidArgument.
absl::StatusOr<std::vector<PrngKey>> Split(const PrngKey& key, std::size_t n);

// Maps a 64-bit word to [0, 1) using its top 53 bits.
inline double ToUnitInterval(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// i.i.d. N(0, stddev^2) samples. Normals are produced by Box-Muller from
// stream block i/4: words (0,1) give normals 4i, 4i+1 and words (2,3) give
// 4i+2, 4i+3. Element j therefore depends only on (key, j), which is what lets
// the fill run in parallel. stddev == 0 yields exact zeros; negative stddev is
// InvalidArgument.
absl::StatusOr<GradientVector> Gaussian(const PrngKey& key, std::size_t length,
                                        double stddev);

// Same draws as Gaussian() but written into an existing buffer. Caller checks
// stddev >= 0.
void FillGaussian(const PrngKey& key, double stddev, std::span<double> out);

// Gaussian noise for a layout where each segment draws from its own child key
// FoldIn(key, segment_index). Segments can then be produced independently.
absl::StatusOr<GradientVector> GaussianPerSegment(const PrngKey& key,
                                                  const LayoutPtr& layout,
                                                  double stddev);

// Uniform [0, 1) draws; element j is word j%4 of block j/4.
void FillUniform(const PrngKey& key, std::span<double> out);

// Sequential reader over a key's stream, for inherently serial consumers such
// as shuffles. Satisfies UniformRandomBitGenerator.
class PrngStream {
 public:
  using result_type = std::uint64_t;

  explicit PrngStream(PrngKey key) : key_(std::move(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();
  double NextUniform() { return ToUnitInterval((*this)()); }
  // Uniform integer in [0, bound). bound must be > 0. Lemire's multiply-shift
  // with rejection, so the result is exactly uniform.
  std::uint64_t NextBelow(std::uint64_t bound);

 private:
  PrngKey key_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint64_t, 4> buffer_{};
  int buffered_ = 0;
};

// In-place Fisher-Yates shuffle driven by `stream`.
template <typename T>
void Shuffle(std::vector<T>& items, PrngStream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = stream.NextBelow(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace dpcore

#endif  // DPCORE_PRNG_H_
