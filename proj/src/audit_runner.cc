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

#include <set>

#include "dpcore/auditing.h"
#include "dpcore/config.h"
#include "dpcore/data.h"
#include "dpcore/trainer.h"

namespace dpcore {

absl::StatusOr<AuditReport> RunAudit(const RunConfig& run_config,
                                     const AuditConfig& audit_config) {
  absl::StatusOr<Dataset> base = LoadDataset(run_config.dataset);
  if (!base.ok()) return base.status();
  ModelSpec model = run_config.model;
  model.input_dim = base->feature_dim;
  absl::StatusOr<GradientVector> init = InitialParams(model, run_config.seed);
  if (!init.ok()) return init.status();

  absl::StatusOr<CanarySet> canaries = AssignCanaries(
      audit_config.canaries, audit_config.kind, *base,
      FoldIn(Seed(run_config.seed), kCanaryKeyTag), model, *init,
      audit_config.canary_options);
  if (!canaries.ok()) return canaries.status();

  Dataset train;
  train.feature_dim = base->feature_dim;
  train.task = base->task;
  const std::set<std::size_t> held_out(canaries->source_indices.begin(),
                                       canaries->source_indices.end());
  for (std::size_t i = 0; i < base->size(); ++i) {
    if (!held_out.count(i)) train.examples.push_back(base->examples[i]);
  }
  for (std::size_t i = 0; i < canaries->size(); ++i) {
    if (canaries->included[i]) train.examples.push_back(canaries->canaries[i]);
  }

  absl::StatusOr<TrainingRun> run = RunTraining(run_config, train);
  if (!run.ok()) return run.status();
  absl::StatusOr<std::vector<double>> scores =
      ScoreCanaries(model, run->final_params, *canaries);
  if (!scores.ok()) return scores.status();

  const double theory = audit_config.claimed_epsilon.value_or(run->report.epsilon);
  const double delta =
      run_config.mechanism == Mechanism::kNone ? 0.0 : run_config.privacy.delta;
  return EvaluateAudit(*scores, canaries->included, theory, delta,
                       audit_config);
}

}  // namespace dpcore
