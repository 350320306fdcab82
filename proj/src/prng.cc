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

#include "dpcore/prng.h"

#include <cmath>
#include <numbers>
#include <utility>

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;
constexpr int kPhiloxRounds = 10;

// Counter word 1 separates output blocks from key derivation.
constexpr std::uint64_t kStreamDomain = 0;
constexpr std::uint64_t kDeriveDomain = 1;
constexpr std::uint64_t kSeedDomain = 2;

// Fixed key for turning integer seeds into key material.
constexpr std::array<std::uint64_t, 2> kSeedKey = {0x243F6A8885A308D3ULL,
                                                   0x13198A2E03707344ULL};

inline void MulHiLo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// Two normals from two words.
inline void BoxMuller(std::uint64_t a, std::uint64_t b, double& z0,
                      double& z1) {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = ToUnitInterval(b);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(theta);
  z1 = r * std::sin(theta);
}

}  // namespace

std::array<std::uint64_t, 4> Philox4x64(std::array<std::uint64_t, 4> ctr,
                                        std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < kPhiloxRounds; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    MulHiLo(kPhiloxM0, ctr[0], hi0, lo0);
    MulHiLo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::array<std::uint64_t, 4> PrngKey::Block(std::uint64_t index) const {
  return Philox4x64({index, kStreamDomain, words_[2], words_[3]},
                    {words_[0], words_[1]});
}

PrngKey Seed(std::uint64_t seed) {
  return PrngKey(Philox4x64({seed, kSeedDomain, 0, 0}, kSeedKey), {});
}

PrngKey FoldIn(const PrngKey& key, std::uint64_t index) {
  const auto& w = key.words();
  std::vector<std::uint64_t> lineage = key.lineage();
  lineage.push_back(index);
  return PrngKey(Philox4x64({index, kDeriveDomain, w[2], w[3]}, {w[0], w[1]}),
                 std::move(lineage));
}

absl::StatusOr<std::vector<PrngKey>> Split(const PrngKey& key, std::size_t n) {
  if (n == 0) {
    return absl::InvalidArgumentError("split count must be at least 1");
  }
  std::vector<PrngKey> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(FoldIn(key, i));
  return out;
}

void FillGaussian(const PrngKey& key, double stddev, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(out.size());
  if (stddev == 0.0) {
    for (double& v : out) v = 0.0;
    return;
  }
  const std::int64_t blocks = (n + 3) / 4;
#pragma omp parallel for schedule(static) if (blocks > 4096)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const auto w = key.Block(static_cast<std::uint64_t>(b));
    double z[4];
    BoxMuller(w[0], w[1], z[0], z[1]);
    BoxMuller(w[2], w[3], z[2], z[3]);
    const std::int64_t base = 4 * b;
    const std::int64_t count = std::min<std::int64_t>(4, n - base);
    for (std::int64_t j = 0; j < count; ++j) out[base + j] = stddev * z[j];
  }
}

absl::StatusOr<GradientVector> Gaussian(const PrngKey& key, std::size_t length,
                                        double stddev) {
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) {
    return absl::InvalidArgumentError(
        absl::StrCat("stddev must be finite and non-negative, got ", stddev));
  }
  GradientVector out(Layout::Flat(length));
  FillGaussian(key, stddev, out.values());
  return out;
}

absl::StatusOr<GradientVector> GaussianPerSegment(const PrngKey& key,
                                                  const LayoutPtr& layout,
                                                  double stddev) {
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) {
    return absl::InvalidArgumentError(
        absl::StrCat("stddev must be finite and non-negative, got ", stddev));
  }
  GradientVector out(layout);
  const auto& segments = layout->segments();
  for (std::size_t s = 0; s < segments.size(); ++s) {
    FillGaussian(FoldIn(key, s), stddev,
                 out.values().subspan(segments[s].offset, segments[s].length));
  }
  return out;
}

void FillUniform(const PrngKey& key, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(out.size());
  const std::int64_t blocks = (n + 3) / 4;
#pragma omp parallel for schedule(static) if (blocks > 4096)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const auto w = key.Block(static_cast<std::uint64_t>(b));
    const std::int64_t base = 4 * b;
    const std::int64_t count = std::min<std::int64_t>(4, n - base);
    for (std::int64_t j = 0; j < count; ++j) {
      out[base + j] = ToUnitInterval(w[j]);
    }
  }
}

PrngStream::result_type PrngStream::operator()() {
  if (buffered_ == 0) {
    buffer_ = key_.Block(block_index_++);
    buffered_ = 4;
  }
  return buffer_[4 - buffered_--];
}

std::uint64_t PrngStream::NextBelow(std::uint64_t bound) {
  std::uint64_t x = (*this)();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<unsigned __int128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace dpcore
