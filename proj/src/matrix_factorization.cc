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

#include "dpcore/matrix_factorization.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/string_view.h"
#include "absl/strings/strip.h"

namespace dpcore {
namespace {

constexpr double kFiniteDifferenceStep = 1e-6;

std::string FormatShortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// ||A C^{-1}||_F^2. Row r of B = A C^{-1} solves B_r C = A_r, i.e.
// sum_k B_r[j+k] c_k = A_r[j], back-substituted from j = n-1.
double FrobeniusOfSolve(const Workload& w, const std::vector<double>& c) {
  const std::int64_t n = static_cast<std::int64_t>(w.n);
  const std::int64_t band = static_cast<std::int64_t>(c.size());
  std::vector<double> row_sums(w.n, 0.0);
#pragma omp parallel for schedule(static) if (n >= 64)
  for (std::int64_t r = 0; r < n; ++r) {
    std::vector<double> b(w.n, 0.0);
    double acc = 0.0;
    // A is lower-triangular so B_r[j] = 0 for j > r.
    for (std::int64_t j = r; j >= 0; --j) {
      double v = w.matrix[r * n + j];
      for (std::int64_t k = 1; k < band && j + k <= r; ++k) {
        v -= b[j + k] * c[k];
      }
      b[j] = v / c[0];
      acc += b[j] * b[j];
    }
    row_sums[r] = acc;
  }
  double total = 0.0;
  for (double s : row_sums) total += s;
  return total;
}

double Objective(const Workload& w, const std::vector<double>& c) {
  double sens2 = 0.0;
  for (std::size_t k = 0; k < std::min(c.size(), w.n); ++k) sens2 += c[k] * c[k];
  return FrobeniusOfSolve(w, c) * sens2;
}

}  // namespace

Workload PrefixWorkload(std::size_t n) {
  Workload w{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) w.matrix[i * n + j] = 1.0;
  }
  return w;
}

absl::StatusOr<Workload> MakeWorkload(std::size_t n,
                                      std::vector<double> matrix) {
  if (n == 0) return absl::InvalidArgumentError("workload needs n >= 1");
  if (matrix.size() != n * n) {
    return absl::InvalidArgumentError(
        absl::StrCat("workload matrix must have ", n * n, " entries"));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (matrix[i * n + j] != 0.0) {
        return absl::InvalidArgumentError("workload must be lower-triangular");
      }
    }
  }
  return Workload{n, std::move(matrix)};
}

absl::StatusOr<Strategy> Strategy::Create(std::vector<double> coefficients) {
  if (coefficients.empty()) {
    return absl::InvalidArgumentError("strategy needs at least one coefficient");
  }
  if (coefficients[0] != 1.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("strategy coefficient c0 must be 1, got ", coefficients[0]));
  }
  for (double c : coefficients) {
    if (!std::isfinite(c)) {
      return absl::InvalidArgumentError("strategy coefficients must be finite");
    }
  }
  return Strategy(std::move(coefficients));
}

std::vector<double> Strategy::Materialize(std::size_t n) const {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < band() && k <= i; ++k) {
      m[i * n + (i - k)] = coefficients_[k];
    }
  }
  return m;
}

double StrategySensitivity(const Strategy& strategy, std::size_t n) {
  double acc = 0.0;
  const auto& c = strategy.coefficients();
  for (std::size_t k = 0; k < std::min(c.size(), n); ++k) acc += c[k] * c[k];
  return std::sqrt(acc);
}

absl::StatusOr<double> ExpectedError(const Workload& workload,
                                     const Strategy& strategy) {
  if (workload.n == 0 || workload.matrix.size() != workload.n * workload.n) {
    return absl::InvalidArgumentError("malformed workload");
  }
  return Objective(workload, strategy.coefficients());
}

absl::StatusOr<OptimizeResult> OptimizeBanded(const Workload& workload,
                                              std::size_t band,
                                              std::size_t iterations,
                                              double step_size) {
  if (band == 0) return absl::InvalidArgumentError("band must be at least 1");
  if (iterations == 0) {
    return absl::InvalidArgumentError("iterations must be at least 1");
  }
  if (workload.n == 0 || workload.matrix.size() != workload.n * workload.n) {
    return absl::InvalidArgumentError("malformed workload");
  }
  std::vector<double> c(band, 0.0);
  c[0] = 1.0;
  OptimizeResult result;
  result.objective = Objective(workload, c);
  result.best_history.push_back(result.objective);
  if (band == 1) return result;

  std::vector<double> best = c;
  std::vector<double> grad(band, 0.0);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t k = 1; k < band; ++k) {
      const double saved = c[k];
      c[k] = saved + kFiniteDifferenceStep;
      const double up = Objective(workload, c);
      c[k] = saved - kFiniteDifferenceStep;
      const double down = Objective(workload, c);
      c[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        return absl::FailedPreconditionError(absl::StrCat(
            "non-finite objective while differentiating coefficient ", k,
            " at iteration ", it, "; reduce the step size"));
      }
      grad[k] = (up - down) / (2.0 * kFiniteDifferenceStep);
    }
    for (std::size_t k = 1; k < band; ++k) c[k] -= step_size * grad[k];
    const double value = Objective(workload, c);
    if (!std::isfinite(value)) {
      return absl::FailedPreconditionError(
          absl::StrCat("non-finite objective at iteration ", it,
                       "; reduce the step size"));
    }
    if (value < result.objective) {
      result.objective = value;
      best = c;
    }
    result.best_history.push_back(result.objective);
  }
  result.strategy = *Strategy::Create(std::move(best));
  return result;
}

std::string SerializeStrategy(const Strategy& strategy, std::size_t n) {
  std::string out = absl::StrCat("n ", n, "\nb ", strategy.band(),
                                 "\ncoefficients");
  for (double c : strategy.coefficients()) {
    absl::StrAppend(&out, " ", FormatShortest(c));
  }
  out += "\n";
  return out;
}

absl::StatusOr<StrategyRecord> ParseStrategy(std::string_view text) {
  std::optional<std::size_t> n, b;
  std::optional<std::vector<double>> coefficients;
  const absl::string_view body(text.data(), text.size());
  for (absl::string_view line : absl::StrSplit(body, '\n', absl::SkipEmpty())) {
    std::vector<absl::string_view> fields =
        absl::StrSplit(absl::StripAsciiWhitespace(line), ' ', absl::SkipEmpty());
    if (fields.empty()) continue;
    auto parse_count = [&](std::optional<std::size_t>& dst) -> absl::Status {
      std::size_t v = 0;
      if (fields.size() != 2 ||
          std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(),
                          v)
                  .ec != std::errc()) {
        return absl::InvalidArgumentError(
            absl::StrCat("malformed strategy line: ", line));
      }
      dst = v;
      return absl::OkStatus();
    };
    if (fields[0] == "n") {
      if (absl::Status s = parse_count(n); !s.ok()) return s;
    } else if (fields[0] == "b") {
      if (absl::Status s = parse_count(b); !s.ok()) return s;
    } else if (fields[0] == "coefficients") {
      coefficients.emplace();
      for (std::size_t i = 1; i < fields.size(); ++i) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(
            fields[i].data(), fields[i].data() + fields[i].size(), v);
        if (ec != std::errc() || ptr != fields[i].data() + fields[i].size()) {
          return absl::InvalidArgumentError(
              absl::StrCat("malformed coefficient: ", fields[i]));
        }
        coefficients->push_back(v);
      }
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown strategy field: ", fields[0]));
    }
  }
  if (!n || !b || !coefficients) {
    return absl::InvalidArgumentError(
        "strategy record needs n, b and coefficients lines");
  }
  if (coefficients->size() != *b) {
    return absl::InvalidArgumentError(
        absl::StrCat("strategy declares b = ", *b, " but lists ",
                     coefficients->size(), " coefficients"));
  }
  absl::StatusOr<Strategy> strategy = Strategy::Create(*std::move(coefficients));
  if (!strategy.ok()) return strategy.status();
  return StrategyRecord{*std::move(strategy), *n};
}

}  // namespace dpcore
