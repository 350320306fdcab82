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

#ifndef DPCORE_AUDITING_H_
#define DPCORE_AUDITING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcore/gradient_vector.h"
#include "dpcore/model.h"
#include "dpcore/prng.h"
#include "json.hpp"

namespace dpcore {

enum class CanaryKind { kLabelFlip, kGradientDirection };

struct CanarySet {
  CanaryKind kind = CanaryKind::kGradientDirection;
  // Fair coin per canary, drawn from a dedicated child key.
  std::vector<bool> included;
  std::vector<Example> canaries;
  // Label-flip: index of the base example each canary was copied from. These
  // examples must be held out of training.
  std::vector<std::size_t> source_indices;
  // Gradient-direction: unit descent direction -g/||g|| of each canary at the
  // initial parameters.
  std::vector<GradientVector> directions;
  GradientVector init_params;

  std::size_t size() const { return canaries.size(); }
};

struct CanaryOptions {
  // Gradient-direction canaries: feature-vector norm. 0 picks sqrt(d).
  double feature_norm = 0.0;
};

// Label-flip canaries need a binary-classification base with at least m
// examples. Gradient-direction canaries are synthetic points along random
// feature directions with random labels; their directions are taken from the
// model gradient at `init_params`.
absl::StatusOr<CanarySet> AssignCanaries(std::size_t m, CanaryKind kind,
                                         const Dataset& base,
                                         const PrngKey& key,
                                         const ModelSpec& model,
                                         const GradientVector& init_params,
                                         const CanaryOptions& options = {});

// Membership scores, higher meaning "more likely trained on". Label-flip:
// -loss at the final parameters. Gradient-direction: <final - init, dir>.
absl::StatusOr<std::vector<double>> ScoreCanaries(
    const ModelSpec& model, const GradientVector& final_params,
    const CanarySet& canaries);

enum class Guess { kIn, kOut, kAbstain };

// Score above the median means kIn, otherwise kOut.
std::vector<Guess> MedianThresholdGuesses(const std::vector<double>& scores);

// Top k scores guess kIn, bottom k guess kOut, the rest abstain. k is capped
// at floor(m / 2).
std::vector<Guess> TopBottomGuesses(const std::vector<double>& scores,
                                    std::size_t k);

// P[Binomial(n, p) >= v].
double BinomialUpperTail(std::size_t n, double p, std::size_t v);

// One-sided upper Clopper-Pearson bound on a binomial proportion after
// observing `successes` out of `trials`, at the given confidence.
double ClopperPearsonUpper(std::size_t successes, std::size_t trials,
                           double confidence);

// Epsilon lower bound from an in/out attack: with FPR and FNR replaced by
// their Clopper-Pearson upper bounds,
//   max(0, log((1-delta-FNR)/FPR), log((1-delta-FPR)/FNR)).
// Abstentions are not allowed. All-in or all-out truth is InvalidArgument.
absl::StatusOr<double> ClopperPearsonEpsilon(const std::vector<Guess>& guesses,
                                             const std::vector<bool>& truth,
                                             double delta, double confidence);

// One-run bound for r guesses of which v are correct: the epsilon at which
// P[Binomial(r, e^eps/(1+e^eps)) >= v] equals 1 - confidence, i.e. every
// smaller epsilon is rejected at that confidence. 0 when v <= r/2. Pure-DP
// form (no delta correction). v > r is InvalidArgument.
absl::StatusOr<double> OneRunEpsilon(std::size_t r, std::size_t v,
                                     std::size_t m, double confidence);

struct AuditConfig {
  std::size_t canaries = 500;
  CanaryKind kind = CanaryKind::kLabelFlip;
  // Guesses per side for the one-run bound; 0 means m / 10.
  std::size_t guesses_per_side = 0;
  double confidence = 0.95;
  // Compare against this instead of the trainer's accounted epsilon. Lets a
  // run with a deliberately broken mechanism be checked against the epsilon
  // it claims to have.
  std::optional<double> claimed_epsilon;
  CanaryOptions canary_options;
};

struct AuditReport {
  std::vector<double> scores;
  std::vector<Guess> guesses;
  std::vector<bool> truth;
  double epsilon_theory = 0.0;
  double epsilon_cp = 0.0;
  double epsilon_one_run = 0.0;
  double confidence = 0.0;
  double delta = 0.0;
  std::size_t m = 0;
  std::size_t r = 0;
  std::size_t v = 0;
  // max(epsilon_cp, epsilon_one_run) <= epsilon_theory.
  bool pass = false;
};

// Fixed field names: epsilon_theory, epsilon_cp, epsilon_one_run, confidence,
// m, r, v, pass (plus delta). An infinite epsilon_theory serializes as null.
nlohmann::json AuditReportToJson(const AuditReport& report);

// Converts scores into both bounds and the pass flag.
absl::StatusOr<AuditReport> EvaluateAudit(const std::vector<double>& scores,
                                          const std::vector<bool>& truth,
                                          double epsilon_theory, double delta,
                                          const AuditConfig& config);

struct RunConfig;

// Trains once with canaries injected according to their inclusion bits
// (label-flip sources held out), scores them, and evaluates the audit.
absl::StatusOr<AuditReport> RunAudit(const RunConfig& run_config,
                                     const AuditConfig& audit_config);

}  // namespace dpcore

#endif  // DPCORE_AUDITING_H_
