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

#include "dpcore/trainer.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpcore/accounting.h"
#include "dpcore/batch_selection.h"
#include "dpcore/clipping.h"
#include "dpcore/data.h"
#include "dpcore/optimizer.h"
#include "dpcore/privatizer.h"
#include "dpcore/prng.h"

namespace dpcore {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json FiniteOrNull(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

BatchPlan MakePlan(const RunConfig& cfg, std::size_t n) {
  BatchPlan plan;
  plan.strategy = cfg.batch.strategy;
  plan.dataset_size = n;
  plan.sampling_prob = cfg.batch.sampling_prob;
  plan.batch_size = cfg.batch.batch_size;
  plan.iterations = cfg.steps;
  plan.max_batch_size = cfg.batch.max_batch_size;
  plan.key = FoldIn(Seed(cfg.seed), kBatchKeyTag);
  return plan;
}

absl::StatusOr<Strategy> ResolveStrategy(const StrategyConfig& sc,
                                         std::size_t steps) {
  if (!sc.coefficients.empty()) return Strategy::Create(sc.coefficients);
  if (sc.band == 1) return Strategy::Identity();
  if (sc.optimize_iterations == 0) {
    return absl::InvalidArgumentError(
        "a banded strategy with band > 1 needs coefficients or "
        "optimize_iterations");
  }
  absl::StatusOr<OptimizeResult> opt = OptimizeBanded(
      PrefixWorkload(steps), sc.band, sc.optimize_iterations, sc.step_size);
  if (!opt.ok()) return opt.status();
  return opt->strategy;
}

}  // namespace

absl::StatusOr<ResolvedPrivacy> ResolvePrivacy(const RunConfig& cfg,
                                               std::size_t dataset_size) {
  if (absl::Status s = ValidateRunConfig(cfg); !s.ok()) return s;
  const BatchPlan plan = MakePlan(cfg, dataset_size);
  if (absl::Status s = ValidatePlan(plan); !s.ok()) return s;
  const PlanMetadata meta = DescribePlan(plan);

  ResolvedPrivacy out;
  if (!meta.warning.empty()) out.warnings.push_back(meta.warning);
  if (cfg.mechanism == Mechanism::kNone) {
    out.epsilon = kInf;
    out.accounting = "none";
    return out;
  }
  const PrivacyConfig& p = cfg.privacy;
  if (p.amplified && !meta.amplification_valid) {
    return absl::FailedPreconditionError(
        "amplified accounting requested for a plan without Poisson sampling");
  }

  if (cfg.mechanism == Mechanism::kDpSgd) {
    out.accounted_sampling_prob = p.amplified ? cfg.batch.sampling_prob : 1.0;
    out.accounting = p.amplified ? "rdp-amplified" : "rdp-unamplified";
    if (p.target_epsilon) {
      absl::StatusOr<double> sigma = CalibrateNoise(
          *p.target_epsilon, p.delta, out.accounted_sampling_prob, cfg.steps);
      if (!sigma.ok()) return sigma.status();
      out.noise_multiplier = *sigma;
    } else {
      out.noise_multiplier = *p.noise_multiplier;
    }
    PrivacySpec spec;
    spec.delta = p.delta;
    spec.noise_multiplier = out.noise_multiplier;
    spec.sampling_prob = out.accounted_sampling_prob;
    spec.steps = cfg.steps;
    spec.amplification_valid = p.amplified;
    absl::StatusOr<double> eps = Epsilon(spec);
    if (!eps.ok()) return eps.status();
    out.epsilon = *eps;
    return out;
  }

  // Banded MF, single participation.
  absl::StatusOr<Strategy> strategy = ResolveStrategy(cfg.strategy, cfg.steps);
  if (!strategy.ok()) return strategy.status();
  out.strategy = *std::move(strategy);
  out.accounting = "mf-single-participation";
  out.warnings.push_back(
      "banded matrix-factorization epsilon assumes every example participates "
      "in at most one step; multiple participations are not accounted");
  if (p.target_epsilon) {
    absl::StatusOr<double> sigma =
        CalibrateAnalyticGaussian(*p.target_epsilon, p.delta);
    if (!sigma.ok()) return sigma.status();
    out.noise_multiplier = *sigma;
  } else {
    out.noise_multiplier = *p.noise_multiplier;
  }
  absl::StatusOr<double> eps =
      MfEpsilon(out.strategy, out.noise_multiplier, p.delta, cfg.steps);
  if (!eps.ok()) return eps.status();
  out.epsilon = *eps;
  return out;
}

nlohmann::json TrainReportToJson(const TrainReport& r, bool include_timing) {
  nlohmann::json j;
  j["config"] = r.config;
  j["seed"] = r.seed;
  j["mechanism"] = MechanismName(r.mechanism);
  j["dataset_size"] = r.dataset_size;
  j["steps"] = r.steps;
  j["noise_multiplier"] = r.noise_multiplier;
  j["noise_stddev"] = r.noise_stddev;
  j["epsilon"] = FiniteOrNull(r.epsilon);
  j["delta"] = r.delta;
  j["target_epsilon"] =
      r.target_epsilon ? nlohmann::json(*r.target_epsilon) : nlohmann::json();
  j["clip_norm"] = r.clip_norm;
  j["accounting"] = r.accounting;
  j["normalization_denominator"] = r.normalization_denominator;
  if (r.mechanism == Mechanism::kBandedMf) {
    j["strategy_coefficients"] = r.strategy_coefficients;
  }
  nlohmann::json traj = nlohmann::json::array();
  for (const LossPoint& p : r.loss_trajectory) {
    traj.push_back({{"step", p.step}, {"loss", FiniteOrNull(p.loss)}});
  }
  j["loss_trajectory"] = traj;
  j["initial_loss"] = FiniteOrNull(r.initial_loss);
  j["final_loss"] = FiniteOrNull(r.final_loss);
  j["nonfinite_loss_examples"] = r.nonfinite_loss_examples;
  j["dropped_nonfinite_total"] = r.dropped_nonfinite_total;
  j["empty_batches"] = r.empty_batches;
  j["examples_processed"] = r.examples_processed;
  j["warnings"] = r.warnings;
  if (include_timing) {
    j["timing"] = {{"total_seconds", r.total_seconds},
                   {"seconds_per_step", r.seconds_per_step}};
  }
  return j;
}

absl::StatusOr<GradientVector> InitialParams(const ModelSpec& model,
                                             std::uint64_t seed) {
  return InitParams(model, FoldIn(Seed(seed), kParamsKeyTag));
}

absl::StatusOr<double> EvaluationLoss(const ModelSpec& model,
                                      const GradientVector& params,
                                      const Dataset& dataset,
                                      std::size_t* nonfinite) {
  double total = 0.0;
  std::size_t count = 0, bad = 0;
  for (const Example& ex : dataset.examples) {
    absl::StatusOr<double> loss = PerExampleLoss(model, params, ex);
    if (!loss.ok()) return loss.status();
    if (std::isfinite(*loss)) {
      total += *loss;
      ++count;
    } else {
      ++bad;
    }
  }
  if (nonfinite != nullptr) *nonfinite = bad;
  return count == 0 ? std::nan("") : total / double(count);
}

absl::StatusOr<TrainingRun> RunTraining(const RunConfig& config,
                                        const Dataset& dataset) {
  RunConfig cfg = config;
  cfg.model.input_dim = dataset.feature_dim;
  if (absl::Status s = ValidateModel(cfg.model); !s.ok()) return s;
  if (absl::Status s = ValidateDataset(dataset); !s.ok()) return s;
  if (cfg.model.effective_loss() == LossKind::kLogistic &&
      dataset.task != TaskKind::kBinaryClassification) {
    return absl::InvalidArgumentError(
        "logistic loss needs a binary-classification dataset");
  }
  const std::size_t n = dataset.size();

  // Everything that can fail on policy grounds is decided before step 1.
  absl::StatusOr<ResolvedPrivacy> privacy = ResolvePrivacy(cfg, n);
  if (!privacy.ok()) return privacy.status();
  absl::StatusOr<BatchIterator> batches =
      BatchIterator::Create(MakePlan(cfg, n));
  if (!batches.ok()) return batches.status();
  const PlanMetadata meta = batches->metadata();

  TrainingRun run;
  absl::StatusOr<GradientVector> params = InitialParams(cfg.model, cfg.seed);
  if (!params.ok()) return params.status();
  run.init_params = *params;

  std::optional<Privatizer> privatizer;
  std::optional<PrivatizerState> noise_state;
  if (cfg.mechanism != Mechanism::kNone) {
    absl::StatusOr<Privatizer> p =
        cfg.mechanism == Mechanism::kDpSgd
            ? Privatizer::Gaussian(privacy->noise_multiplier,
                                   cfg.clip.clip_norm)
            : Privatizer::BandedForStrategy(privacy->noise_multiplier,
                                            cfg.clip.clip_norm,
                                            privacy->strategy, cfg.steps);
    if (!p.ok()) return p.status();
    privatizer = *std::move(p);
    absl::StatusOr<PrivatizerState> st =
        InitPrivatizer(*privatizer, params->layout(),
                       FoldIn(Seed(cfg.seed), kNoiseKeyTag));
    if (!st.ok()) return st.status();
    noise_state = *std::move(st);
  }
  OptimizerState opt_state = AdamWInit(*params);

  TrainReport& report = run.report;
  report.config = RunConfigToJson(cfg);
  report.seed = cfg.seed;
  report.mechanism = cfg.mechanism;
  report.dataset_size = n;
  report.steps = cfg.steps;
  report.noise_multiplier = privacy->noise_multiplier;
  report.noise_stddev = privatizer ? privatizer->stddev() : 0.0;
  report.epsilon = privacy->epsilon;
  report.delta = cfg.mechanism == Mechanism::kNone ? 0.0 : cfg.privacy.delta;
  report.target_epsilon = cfg.privacy.target_epsilon;
  report.clip_norm = cfg.clip.clip_norm;
  report.accounting = privacy->accounting;
  report.strategy_coefficients = privacy->strategy.coefficients();
  report.warnings = privacy->warnings;
  report.normalization_denominator =
      meta.expected_batch_size > 0.0 ? meta.expected_batch_size : 1.0;

  const std::size_t eval_every =
      cfg.eval_every > 0 ? cfg.eval_every : std::max<std::size_t>(1, cfg.steps / 20);
  auto evaluate = [&](std::size_t step) -> absl::Status {
    std::size_t bad = 0;
    absl::StatusOr<double> loss = EvaluationLoss(cfg.model, *params, dataset, &bad);
    if (!loss.ok()) return loss.status();
    report.loss_trajectory.push_back({step, *loss});
    report.nonfinite_loss_examples = bad;
    return absl::OkStatus();
  };
  if (absl::Status s = evaluate(0); !s.ok()) return s;

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const IndexList indices = batches->BatchAt(t);
    if (indices.empty()) ++report.empty_batches;
    report.examples_processed += indices.size();
    std::vector<Example> batch;
    if (!cfg.batch.pad_buckets.empty()) {
      absl::StatusOr<PaddedBatch> padded =
          PadBatch(indices, cfg.batch.pad_buckets);
      if (!padded.ok()) return padded.status();
      batch = GatherBatch(dataset, *padded);
    } else {
      batch = GatherBatch(dataset, indices);
    }

    GradientVector grad;
    if (cfg.mechanism == Mechanism::kNone) {
      absl::StatusOr<GradientVector> g = BatchGradSum(cfg.model, *params, batch);
      if (!g.ok()) return g.status();
      grad = *std::move(g);
    } else {
      absl::StatusOr<ClippedGradientSum> clipped =
          ClippedGradSum(cfg.model, *params, batch, cfg.clip);
      if (!clipped.ok()) return clipped.status();
      report.dropped_nonfinite_total += clipped->dropped_nonfinite_count;
      auto noisy = Privatize(*privatizer, *clipped, *std::move(noise_state));
      if (!noisy.ok()) return noisy.status();
      grad = std::move(noisy->first);
      noise_state = std::move(noisy->second);
    }
    grad.Scale(1.0 / report.normalization_denominator);

    GradientVector update;
    if (cfg.optimizer.kind == OptimizerKind::kSgd) {
      absl::StatusOr<GradientVector> u =
          SgdUpdate(cfg.optimizer.adamw.learning_rate, grad, *params);
      if (!u.ok()) return u.status();
      update = *std::move(u);
    } else {
      auto u = AdamWUpdate(cfg.optimizer.adamw, grad, std::move(opt_state),
                           *params);
      if (!u.ok()) return u.status();
      update = std::move(u->first);
      opt_state = std::move(u->second);
    }
    if (absl::Status s = ApplyUpdates(*params, update); !s.ok()) return s;

    if ((t + 1) % eval_every == 0 || t + 1 == cfg.steps) {
      if (absl::Status s = evaluate(t + 1); !s.ok()) return s;
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report.total_seconds = seconds;
  report.seconds_per_step = seconds / double(cfg.steps);
  report.initial_loss = report.loss_trajectory.front().loss;
  report.final_loss = report.loss_trajectory.back().loss;
  run.final_params = *std::move(params);
  return run;
}

absl::StatusOr<TrainingRun> Train(const RunConfig& config) {
  absl::StatusOr<Dataset> data = LoadDataset(config.dataset);
  if (!data.ok()) return data.status();
  absl::StatusOr<TrainingRun> run = RunTraining(config, *data);
  if (!run.ok()) return run.status();
  if (!config.report_path.empty()) {
    std::ofstream out(config.report_path);
    if (!out) {
      return absl::InternalError(
          absl::StrCat("cannot write report to ", config.report_path));
    }
    out << TrainReportToJson(run->report).dump(2) << "\n";
  }
  return run;
}

}  // namespace dpcore
