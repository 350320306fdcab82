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

#include "dpcore/reference.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "absl/strings/str_cat.h"

namespace dpcore::reference {

void FillGaussianSerial(const PrngKey& key, double stddev,
                        std::span<double> out) {
  PrngStream stream(key);
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const std::uint64_t a = stream();
    const std::uint64_t b = stream();
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = ToUnitInterval(b);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    out[i] = stddev == 0.0 ? 0.0 : stddev * (r * std::cos(theta));
    if (i + 1 < out.size()) {
      out[i + 1] = stddev == 0.0 ? 0.0 : stddev * (r * std::sin(theta));
    }
  }
}

absl::StatusOr<ClippedGradientSum> ClippedGradSumSequential(
    const ModelSpec& model, const GradientVector& params,
    std::span<const Example> batch, const ClipConfig& config) {
  if (absl::Status s = ValidateClipConfig(config); !s.ok()) return s;
  ClippedGradientSum result;
  result.sum = GradientVector(params.layout());
  result.sensitivity = config.clip_norm;
  result.peak_live_per_example = batch.empty() ? 0 : 1;

  auto fold = [&](GradientVector unit) -> absl::Status {
    if (!unit.AllFinite()) {
      ++result.dropped_nonfinite_count;
      if (config.record_units) {
        result.unit_contributions.emplace_back(params.layout());
      }
      return absl::OkStatus();
    }
    GradientVector clipped =
        Clip(std::move(unit), config.clip_norm, config.geometry);
    if (absl::Status s = result.sum.AddScaled(clipped); !s.ok()) return s;
    ++result.contributing_count;
    if (config.record_units) result.unit_contributions.push_back(clipped);
    return absl::OkStatus();
  };

  if (config.level == ClipLevel::kExample) {
    for (const Example& ex : batch) {
      if (ex.is_dummy) continue;
      absl::StatusOr<GradientVector> g = PerExampleGrad(model, params, ex);
      if (!g.ok()) return g.status();
      if (absl::Status s = fold(*std::move(g)); !s.ok()) return s;
    }
    return result;
  }

  std::vector<std::pair<std::int64_t, GradientVector>> groups;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Example& ex = batch[i];
    if (ex.is_dummy) continue;
    if (!ex.group.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("group-level clipping needs a group key on example ", i));
    }
    absl::StatusOr<GradientVector> g = PerExampleGrad(model, params, ex);
    if (!g.ok()) return g.status();
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& e) { return e.first == *ex.group; });
    if (it == groups.end()) {
      groups.emplace_back(*ex.group, *std::move(g));
    } else if (absl::Status s = it->second.AddScaled(*g); !s.ok()) {
      return s;
    }
  }
  for (auto& [key, sum] : groups) {
    if (absl::Status s = fold(std::move(sum)); !s.ok()) return s;
  }
  return result;
}

absl::StatusOr<GradientVector> BatchGradSumSerial(
    const ModelSpec& model, const GradientVector& params,
    std::span<const Example> batch) {
  // Same association as the parallel kernel: per-chunk partial sums, then the
  // partials in chunk order.
  GradientVector total(params.layout());
  const bool single = batch.size() <= kBatchGradChunk;
  for (std::size_t begin = 0; begin < batch.size(); begin += kBatchGradChunk) {
    GradientVector partial(params.layout());
    const std::size_t end = std::min(batch.size(), begin + kBatchGradChunk);
    for (std::size_t i = begin; i < end; ++i) {
      absl::StatusOr<GradientVector> g = PerExampleGrad(model, params, batch[i]);
      if (!g.ok()) return g.status();
      if (absl::Status s = partial.AddScaled(*g); !s.ok()) return s;
    }
    if (single) return partial;
    if (absl::Status s = total.AddScaled(partial); !s.ok()) return s;
  }
  return total;
}

}  // namespace dpcore::reference
