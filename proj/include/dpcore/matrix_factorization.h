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

#ifndef DPCORE_MATRIX_FACTORIZATION_H_
#define DPCORE_MATRIX_FACTORIZATION_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace dpcore {

// n x n lower-triangular workload, row-major.
struct Workload {
  std::size_t n = 0;
  std::vector<double> matrix;

  double at(std::size_t i, std::size_t j) const { return matrix[i * n + j]; }
};

// All-ones lower triangle: row i sums steps 0..i.
Workload PrefixWorkload(std::size_t n);

absl::StatusOr<Workload> MakeWorkload(std::size_t n, std::vector<double> matrix);

// Banded lower-triangular Toeplitz strategy matrix C with C[i][i-k] = c_k for
// k < band. c_0 is pinned to 1, so C is unit-diagonal and invertible.
class Strategy {
 public:
  // Requires a non-empty list with coefficients[0] == 1 and finite entries.
  static absl::StatusOr<Strategy> Create(std::vector<double> coefficients);
  static Strategy Identity() { return Strategy({1.0}); }

  std::size_t band() const { return coefficients_.size(); }
  const std::vector<double>& coefficients() const { return coefficients_; }

  // Dense n x n materialization, row-major.
  std::vector<double> Materialize(std::size_t n) const;

  bool operator==(const Strategy&) const = default;

 private:
  explicit Strategy(std::vector<double> coefficients)
      : coefficients_(std::move(coefficients)) {}

  std::vector<double> coefficients_;
};

// Max column L2 norm of the n x n materialization. Column 0 always attains
// the max, so this is ||(c_0 .. c_{min(b,n)-1})||_2.
double StrategySensitivity(const Strategy& strategy, std::size_t n);

// ||A C^{-1}||_F^2 * sens(C)^2, with A C^{-1} computed row by row through
// triangular solves against the banded structure.
absl::StatusOr<double> ExpectedError(const Workload& workload,
                                     const Strategy& strategy);

struct OptimizeResult {
  Strategy strategy = Strategy::Identity();
  double objective = 0.0;
  // Best-so-far objective after each iteration, iteration 0 being the
  // identity start point.
  std::vector<double> best_history;
};

// Fixed-step gradient descent on c_1..c_{b-1} with central finite-difference
// gradients (step 1e-6), starting from the identity. Returns the best iterate,
// so the result is never worse than the identity. band == 1 returns the
// identity. A non-finite objective aborts with FailedPrecondition.
absl::StatusOr<OptimizeResult> OptimizeBanded(const Workload& workload,
                                              std::size_t band,
                                              std::size_t iterations,
                                              double step_size);

// Plain-text record:
//   n <steps>
//   b <band>
//   coefficients <c_0> ... <c_{b-1}>
// Doubles use shortest round-trip formatting.
std::string SerializeStrategy(const Strategy& strategy, std::size_t n);

struct StrategyRecord {
  Strategy strategy = Strategy::Identity();
  std::size_t n = 0;
};
absl::StatusOr<StrategyRecord> ParseStrategy(std::string_view text);

}  // namespace dpcore

#endif  // DPCORE_MATRIX_FACTORIZATION_H_
