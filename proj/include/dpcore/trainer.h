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

#ifndef DPCORE_TRAINER_H_
#define DPCORE_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/config.h"
#include "dpcore/gradient_vector.h"
#include "dpcore/matrix_factorization.h"
#include "dpcore/model.h"
#include "json.hpp"

namespace dpcore {

// Root-key children used by a run.
inline constexpr std::uint64_t kParamsKeyTag = 0;
inline constexpr std::uint64_t kBatchKeyTag = 1;
inline constexpr std::uint64_t kNoiseKeyTag = 2;
inline constexpr std::uint64_t kCanaryKeyTag = 3;

// Noise multiplier, epsilon and strategy of a run, fixed before any training
// step. Policy violations surface here.
struct ResolvedPrivacy {
  double noise_multiplier = 0.0;
  // +inf for the non-private baseline and for noise_multiplier == 0.
  double epsilon = 0.0;
  // Sampling probability handed to the accountant (1 without amplification).
  double accounted_sampling_prob = 1.0;
  std::string accounting;
  Strategy strategy = Strategy::Identity();
  std::vector<std::string> warnings;
};

absl::StatusOr<ResolvedPrivacy> ResolvePrivacy(const RunConfig& config,
                                               std::size_t dataset_size);

struct LossPoint {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainReport {
  nlohmann::json config;
  std::uint64_t seed = 0;
  Mechanism mechanism = Mechanism::kDpSgd;
  std::size_t dataset_size = 0;
  std::size_t steps = 0;
  double noise_multiplier = 0.0;
  double noise_stddev = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::optional<double> target_epsilon;
  double clip_norm = 0.0;
  std::string accounting;
  double normalization_denominator = 1.0;
  std::vector<double> strategy_coefficients;
  std::vector<LossPoint> loss_trajectory;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  // Examples whose loss was non-finite and left out of the averages above.
  std::size_t nonfinite_loss_examples = 0;
  std::size_t dropped_nonfinite_total = 0;
  std::size_t empty_batches = 0;
  std::size_t examples_processed = 0;
  std::vector<std::string> warnings;
  // Wall-clock fields; the only nondeterministic part of the report.
  double total_seconds = 0.0;
  double seconds_per_step = 0.0;
};

// Timing lives under a single "timing" key.
nlohmann::json TrainReportToJson(const TrainReport& report,
                                 bool include_timing = true);

struct TrainingRun {
  TrainReport report;
  GradientVector init_params;
  GradientVector final_params;
};

absl::StatusOr<GradientVector> InitialParams(const ModelSpec& model,
                                             std::uint64_t seed);

// Mean per-example loss over the finite losses; `nonfinite` counts the rest.
absl::StatusOr<double> EvaluationLoss(const ModelSpec& model,
                                      const GradientVector& params,
                                      const Dataset& dataset,
                                      std::size_t* nonfinite = nullptr);

// Batch -> clip -> privatize -> normalize -> optimizer update -> apply, for
// config.steps steps over `dataset`. config.model.input_dim is overridden by
// the dataset's feature dimension.
absl::StatusOr<TrainingRun> RunTraining(const RunConfig& config,
                                        const Dataset& dataset);

// Loads the configured dataset, trains, and writes the report JSON to
// config.report_path when set.
absl::StatusOr<TrainingRun> Train(const RunConfig& config);

}  // namespace dpcore

#endif  // DPCORE_TRAINER_H_
