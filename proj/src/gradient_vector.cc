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

#include "dpcore/gradient_vector.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace dpcore {

Layout::Layout(std::vector<Segment> segments) : segments_(std::move(segments)) {
  for (const Segment& s : segments_) size_ += s.length;
}

std::shared_ptr<const Layout> Layout::FromSizes(
    const std::vector<std::pair<std::string, std::size_t>>& sizes) {
  std::vector<Segment> segments;
  segments.reserve(sizes.size());
  std::size_t offset = 0;
  for (const auto& [name, length] : sizes) {
    segments.push_back(Segment{name, offset, length});
    offset += length;
  }
  return std::shared_ptr<const Layout>(new Layout(std::move(segments)));
}

std::shared_ptr<const Layout> Layout::Flat(std::size_t length,
                                           std::string name) {
  return FromSizes({{std::move(name), length}});
}

const Segment* Layout::Find(std::string_view name) const {
  for (const Segment& s : segments_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool SameLayout(const LayoutPtr& a, const LayoutPtr& b) {
  if (a == b) return true;
  if (a == nullptr || b == nullptr) return false;
  return *a == *b;
}

GradientVector::GradientVector(LayoutPtr layout)
    : layout_(std::move(layout)), values_(layout_->size(), 0.0) {}

absl::StatusOr<GradientVector> GradientVector::Create(
    LayoutPtr layout, std::vector<double> values) {
  if (layout == nullptr) {
    return absl::InvalidArgumentError("layout must not be null");
  }
  if (layout->size() != values.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("layout expects ", layout->size(), " values, got ",
                     values.size()));
  }
  return GradientVector(std::move(layout), std::move(values));
}

std::span<double> GradientVector::segment(std::string_view name) {
  const Segment* s = layout_->Find(name);
  if (s == nullptr) return {};
  return std::span<double>(values_).subspan(s->offset, s->length);
}

std::span<const double> GradientVector::segment(std::string_view name) const {
  const Segment* s = layout_->Find(name);
  if (s == nullptr) return {};
  return std::span<const double>(values_).subspan(s->offset, s->length);
}

absl::Status GradientVector::AddScaled(const GradientVector& other,
                                       double scale) {
  if (!SameLayout(layout_, other.layout_)) {
    return absl::InternalError("gradient layouts differ");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += scale * other.values_[i];
  }
  return absl::OkStatus();
}

void GradientVector::Scale(double factor) {
  for (double& v : values_) v *= factor;
}

void GradientVector::SetZero() { std::fill(values_.begin(), values_.end(), 0.0); }

double GradientVector::NormL2() const {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return std::sqrt(acc);
}

double GradientVector::NormL1() const {
  double acc = 0.0;
  for (double v : values_) acc += std::abs(v);
  return acc;
}

double GradientVector::NormLinf() const {
  double acc = 0.0;
  for (double v : values_) acc = std::max(acc, std::abs(v));
  return acc;
}

bool GradientVector::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool GradientVector::operator==(const GradientVector& other) const {
  return SameLayout(layout_, other.layout_) && values_ == other.values_;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace dpcore
