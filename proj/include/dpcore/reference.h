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

// Serial reference implementations of the parallel kernels. They are kept
// deliberately plain so the tests can check the OpenMP paths against them and
// the kernel benchmark can measure the speedup.

#ifndef DPCORE_REFERENCE_H_
#define DPCORE_REFERENCE_H_

#include <span>

#include "absl/status/statusor.h"
#include "dpcore/clipping.h"
#include "dpcore/gradient_vector.h"
#include "dpcore/model.h"
#include "dpcore/prng.h"

namespace dpcore::reference {

// One normal pair at a time from PrngStream-order words.
void FillGaussianSerial(const PrngKey& key, double stddev,
                        std::span<double> out);

// Microbatch size 1: one PerExampleGrad, one Clip, one add per unit, in batch
// order. Ignores config.microbatch_size.
absl::StatusOr<ClippedGradientSum> ClippedGradSumSequential(
    const ModelSpec& model, const GradientVector& params,
    std::span<const Example> batch, const ClipConfig& config);

// Straight loop over PerExampleGrad.
absl::StatusOr<GradientVector> BatchGradSumSerial(
    const ModelSpec& model, const GradientVector& params,
    std::span<const Example> batch);

}  // namespace dpcore::reference

#endif  // DPCORE_REFERENCE_H_
