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

#include "dpcore/clipping.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

bool AllFinite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

void AddInto(std::span<double> acc, std::span<const double> values) {
  for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += values[j];
}

// Computes per-example gradients of batch[begin, begin + count) into rows of
// `buffer`. Example-level mode also clips each row. Rows are independent.
void ComputeMicrobatch(const ModelSpec& model, std::span<const double> params,
                       std::span<const Example> batch, std::size_t begin,
                       std::size_t count, std::size_t width, bool clip,
                       const ClipConfig& config, std::vector<double>& buffer,
                       std::vector<std::uint8_t>& finite) {
  const std::int64_t n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1) if (n > 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const Example& ex = batch[begin + i];
    std::span<double> row(buffer.data() + i * width, width);
    if (ex.is_dummy) {
      finite[i] = 1;
      continue;
    }
    internal::GradUnchecked(model, params, ex, row);
    finite[i] = AllFinite(row) ? 1 : 0;
    if (clip && finite[i]) ClipInPlace(row, config.clip_norm, config.geometry);
  }
}

}  // namespace

absl::Status ValidateClipConfig(const ClipConfig& config) {
  if (!(config.clip_norm > 0.0) || !std::isfinite(config.clip_norm)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "clip norm must be positive and finite, got ", config.clip_norm));
  }
  return absl::OkStatus();
}

double Norm(std::span<const double> values, ClipGeometry geometry) {
  double acc = 0.0;
  switch (geometry) {
    case ClipGeometry::kL2:
      for (double v : values) acc += v * v;
      return std::sqrt(acc);
    case ClipGeometry::kL1:
      for (double v : values) acc += std::abs(v);
      return acc;
    case ClipGeometry::kLinf:
      for (double v : values) acc = std::max(acc, std::abs(v));
      return acc;
  }
  return acc;
}

void ClipInPlace(std::span<double> values, double clip_norm,
                 ClipGeometry geometry) {
  const double norm = Norm(values, geometry);
  if (norm <= clip_norm) return;
  const double scale = clip_norm / norm;
  for (double& v : values) v *= scale;
}

absl::StatusOr<ClippedGradientSum> ClippedGradSum(
    const ModelSpec& model, const GradientVector& params,
    std::span<const Example> batch, const ClipConfig& config) {
  if (absl::Status s = ValidateClipConfig(config); !s.ok()) return s;
  absl::StatusOr<LayoutPtr> layout = ParamLayout(model);
  if (!layout.ok()) return layout.status();
  if (!SameLayout(*layout, params.layout())) {
    return absl::InternalError("parameter layout does not match model");
  }
  const bool group_level = config.level == ClipLevel::kGroup;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Example& ex = batch[i];
    if (ex.is_dummy) continue;
    if (ex.features.size() != model.input_dim) {
      return absl::InvalidArgumentError(
          absl::StrCat("batch example ", i, " has ", ex.features.size(),
                       " features, model expects ", model.input_dim));
    }
    if (group_level && !ex.group.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("group-level clipping needs a group key on example ", i));
    }
  }

  const std::size_t width = params.size();
  const std::size_t micro =
      config.microbatch_size == 0
          ? std::max<std::size_t>(batch.size(), 1)
          : std::min(config.microbatch_size,
                     std::max<std::size_t>(batch.size(), 1));

  ClippedGradientSum result;
  result.sum = GradientVector(params.layout());
  result.sensitivity = config.clip_norm;
  result.peak_live_per_example = batch.empty() ? 0 : micro;

  std::vector<double> buffer(micro * width);
  std::vector<std::uint8_t> finite(micro);
  std::span<double> sum = result.sum.values();

  // Group accumulators in order of first appearance.
  std::unordered_map<std::int64_t, std::size_t> group_slot;
  std::vector<std::vector<double>> group_sums;

  for (std::size_t begin = 0; begin < batch.size(); begin += micro) {
    const std::size_t count = std::min(micro, batch.size() - begin);
    ComputeMicrobatch(model, params.values(), batch, begin, count, width,
                      !group_level, config, buffer, finite);
    for (std::size_t i = 0; i < count; ++i) {
      const Example& ex = batch[begin + i];
      if (ex.is_dummy) continue;
      std::span<const double> row(buffer.data() + i * width, width);
      if (group_level) {
        auto [it, inserted] = group_slot.try_emplace(*ex.group, group_sums.size());
        if (inserted) group_sums.emplace_back(width, 0.0);
        AddInto(group_sums[it->second], row);
        continue;
      }
      if (!finite[i]) {
        ++result.dropped_nonfinite_count;
        if (config.record_units) {
          result.unit_contributions.emplace_back(params.layout());
        }
        continue;
      }
      AddInto(sum, row);
      ++result.contributing_count;
      if (config.record_units) {
        result.unit_contributions.push_back(
            *GradientVector::Create(params.layout(), {row.begin(), row.end()}));
      }
    }
  }

  for (std::vector<double>& group : group_sums) {
    if (!AllFinite(group)) {
      ++result.dropped_nonfinite_count;
      if (config.record_units) {
        result.unit_contributions.emplace_back(params.layout());
      }
      continue;
    }
    ClipInPlace(group, config.clip_norm, config.geometry);
    AddInto(sum, group);
    ++result.contributing_count;
    if (config.record_units) {
      result.unit_contributions.push_back(
          *GradientVector::Create(params.layout(), group));
    }
  }
  return result;
}

absl::StatusOr<ClippedGrad> ClippedGrad::Create(ModelSpec model,
                                                ClipConfig config) {
  if (absl::Status s = ValidateModel(model); !s.ok()) return s;
  if (absl::Status s = ValidateClipConfig(config); !s.ok()) return s;
  return ClippedGrad(model, config);
}

}  // namespace dpcore
