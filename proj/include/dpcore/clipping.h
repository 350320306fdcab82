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

#ifndef DPCORE_CLIPPING_H_
#define DPCORE_CLIPPING_H_

#include <cstddef>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/gradient_vector.h"
#include "dpcore/model.h"

namespace dpcore {

enum class ClipGeometry { kL2, kL1, kLinf };
enum class ClipLevel { kExample, kGroup };

struct ClipConfig {
  double clip_norm = 1.0;
  ClipGeometry geometry = ClipGeometry::kL2;
  ClipLevel level = ClipLevel::kExample;
  // Per-example gradients materialized at once. 0 means the whole batch.
  std::size_t microbatch_size = 0;
  // Debug instrumentation: keep every per-unit clipped contribution.
  bool record_units = false;
};

absl::Status ValidateClipConfig(const ClipConfig& config);

// Aggregated clipped gradients. Under add/remove adjacency of one unit (an
// example, or a group at group level) the sum moves by at most `sensitivity`
// in the clipping geometry, and sensitivity == clip_norm.
struct ClippedGradientSum {
  GradientVector sum;
  double sensitivity = 0.0;
  // Units whose finite clipped gradient entered the sum.
  std::size_t contributing_count = 0;
  // Units whose gradient had a NaN/Inf component; they contribute zero.
  std::size_t dropped_nonfinite_count = 0;
  // Largest number of per-example gradient buffers alive at once.
  std::size_t peak_live_per_example = 0;
  // Per-unit clipped contributions in accumulation order; only filled when
  // ClipConfig::record_units is set. Dropped units appear as zero vectors.
  std::vector<GradientVector> unit_contributions;
};

double Norm(std::span<const double> values, ClipGeometry geometry);

// Scales `values` by min(1, clip_norm / ||values||). Values already inside
// the ball are left bit-for-bit unchanged. Requires clip_norm > 0 and finite
// values.
void ClipInPlace(std::span<double> values, double clip_norm,
                 ClipGeometry geometry);

inline GradientVector Clip(GradientVector g, double clip_norm,
                           ClipGeometry geometry) {
  ClipInPlace(g.values(), clip_norm, geometry);
  return g;
}

// Sum of clipped per-unit gradients over `batch`. Microbatches of per-example
// gradients are computed in parallel, then folded into the sum strictly in
// batch order, so the result is bitwise identical for every microbatch size.
// Dummy examples are skipped. At group level, per-example gradients are
// summed within each group before the group sum is clipped; groups
// accumulate in order of first appearance.
absl::StatusOr<ClippedGradientSum> ClippedGradSum(
    const ModelSpec& model, const GradientVector& params,
    std::span<const Example> batch, const ClipConfig& config);

// Drop-in gradient function with its sensitivity attached. The privatizer
// reads sensitivity() so noise calibration cannot drift from the clip norm.
class ClippedGrad {
 public:
  static absl::StatusOr<ClippedGrad> Create(ModelSpec model, ClipConfig config);

  double sensitivity() const { return config_.clip_norm; }
  const ClipConfig& config() const { return config_; }
  const ModelSpec& model() const { return model_; }

  absl::StatusOr<ClippedGradientSum> operator()(
      const GradientVector& params, std::span<const Example> batch) const {
    return ClippedGradSum(model_, params, batch, config_);
  }

 private:
  ClippedGrad(ModelSpec model, ClipConfig config)
      : model_(model), config_(config) {}

  ModelSpec model_;
  ClipConfig config_;
};

}  // namespace dpcore

#endif  // DPCORE_CLIPPING_H_
