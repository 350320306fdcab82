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

#ifndef DPCORE_GRADIENT_VECTOR_H_
#define DPCORE_GRADIENT_VECTOR_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dpcore {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

// Ordered, contiguous, non-overlapping named segments of a flat vector.
class Layout {
 public:
  // Segments are laid out back to back in the given order.
  static std::shared_ptr<const Layout> FromSizes(
      const std::vector<std::pair<std::string, std::size_t>>& sizes);

  // A layout with one segment named `name` covering `length` values.
  static std::shared_ptr<const Layout> Flat(std::size_t length,
                                            std::string name = "values");

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return size_; }

  // Returns nullptr when no segment has that name.
  const Segment* Find(std::string_view name) const;

  bool operator==(const Layout& other) const {
    return segments_ == other.segments_;
  }

 private:
  explicit Layout(std::vector<Segment> segments);

  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

using LayoutPtr = std::shared_ptr<const Layout>;

bool SameLayout(const LayoutPtr& a, const LayoutPtr& b);

// Flat vector of doubles tagged with a segment layout. Carries both model
// parameters and gradients. Arithmetic between vectors requires identical
// layouts.
class GradientVector {
 public:
  GradientVector() : layout_(Layout::Flat(0)) {}
  explicit GradientVector(LayoutPtr layout);
  // Fails when values.size() does not match the layout.
  static absl::StatusOr<GradientVector> Create(LayoutPtr layout,
                                               std::vector<double> values);
  static GradientVector Zeros(LayoutPtr layout) {
    return GradientVector(std::move(layout));
  }

  const LayoutPtr& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // View of a named segment. Empty span if the name is unknown.
  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;

  // this += scale * other.
  absl::Status AddScaled(const GradientVector& other, double scale = 1.0);
  void Scale(double factor);
  void SetZero();

  double NormL2() const;
  double NormL1() const;
  double NormLinf() const;
  bool AllFinite() const;

  bool operator==(const GradientVector& other) const;

 private:
  GradientVector(LayoutPtr layout, std::vector<double> values)
      : layout_(std::move(layout)), values_(std::move(values)) {}

  LayoutPtr layout_;
  std::vector<double> values_;
};

double Dot(std::span<const double> a, std::span<const double> b);

}  // namespace dpcore

#endif  // DPCORE_GRADIENT_VECTOR_H_
