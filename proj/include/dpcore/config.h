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

#ifndef DPCORE_CONFIG_H_
#define DPCORE_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/auditing.h"
#include "dpcore/batch_selection.h"
#include "dpcore/clipping.h"
#include "dpcore/model.h"
#include "dpcore/optimizer.h"
#include "json.hpp"

namespace dpcore {

enum class Mechanism { kNone, kDpSgd, kBandedMf };
enum class OptimizerKind { kSgd, kAdamW };

struct DatasetSource {
  enum class Kind { kSynthetic, kCsv };
  Kind kind = Kind::kSynthetic;
  TaskKind task = TaskKind::kBinaryClassification;
  // Synthetic.
  std::size_t n = 1000;
  std::size_t d = 10;
  std::uint64_t seed = 0;
  // Regression: stddev of additive label noise. Classification: scale of the
  // true weight vector (larger is more separable).
  double noise = 0.1;
  double signal = 3.0;
  // CSV.
  std::string path;
};

struct PrivacyConfig {
  std::optional<double> target_epsilon;
  std::optional<double> noise_multiplier;
  double delta = 1e-5;
  // Amplification by subsampling. Banded MF is always accounted without it.
  bool amplified = true;
};

struct BatchConfig {
  BatchStrategy strategy = BatchStrategy::kPoisson;
  double sampling_prob = 0.01;
  std::size_t batch_size = 64;
  std::optional<std::size_t> max_batch_size;
  // Non-empty: pad every batch up to the smallest fitting bucket.
  std::vector<std::size_t> pad_buckets;
};

struct StrategyConfig {
  std::size_t band = 1;
  // Explicit Toeplitz coefficients c_0..c_{b-1}; overrides optimization.
  std::vector<double> coefficients;
  // > 0: optimize a band-`band` strategy for the prefix workload over `steps`.
  std::size_t optimize_iterations = 0;
  double step_size = 1e-4;
};

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kAdamW;
  // SGD reads only learning_rate.
  AdamWConfig adamw;
};

struct BenchmarkModel {
  std::string name;
  ModelSpec spec;
};

struct BenchmarkOptions {
  std::size_t warmup_steps = 5;
  std::size_t measured_steps = 50;
  std::size_t min_batch_size = 16;
  std::size_t max_batch_size = 256;
  double noise_multiplier = 1.0;
  // Empty selects the three reference models.
  std::vector<BenchmarkModel> models;
};

struct RunConfig {
  // input_dim is filled from the dataset.
  ModelSpec model;
  DatasetSource dataset;
  Mechanism mechanism = Mechanism::kDpSgd;
  PrivacyConfig privacy;
  ClipConfig clip;
  BatchConfig batch;
  StrategyConfig strategy;
  OptimizerSpec optimizer;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  // Loss evaluation period; 0 picks max(1, steps / 20).
  std::size_t eval_every = 0;
  std::string report_path;
  BenchmarkOptions benchmark;
  AuditConfig audit;
};

std::vector<BenchmarkModel> ReferenceBenchmarkModels();

// Unknown keys are errors so that typos fail instead of silently falling
// back to defaults.
absl::StatusOr<RunConfig> ParseRunConfig(const nlohmann::json& json);
absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path);

// Every field, defaults included.
nlohmann::json RunConfigToJson(const RunConfig& config);

// Cross-field policy: privacy fields against the mechanism, accounting mode
// against the batch strategy, padding against truncation.
absl::Status ValidateRunConfig(const RunConfig& config);

std::string MechanismName(Mechanism mechanism);
std::string BatchStrategyName(BatchStrategy strategy);

}  // namespace dpcore

#endif  // DPCORE_CONFIG_H_
