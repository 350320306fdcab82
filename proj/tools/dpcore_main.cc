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

// dpcore train|calibrate|benchmark|audit --config <path> [--seed N]
//        [--enforce] [--sigma-from <calibrate output>] [--output <path>]
//
// Exit codes: 0 success, 1 audit failed under --enforce, 2 config, policy or
// runtime error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dpcore/auditing.h"
#include "dpcore/config.h"
#include "dpcore/data.h"
#include "dpcore/throughput.h"
#include "dpcore/trainer.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAuditFailed = 1;
constexpr int kExitError = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool enforce = false;
  std::string sigma_from;
  std::string output;
};

int Fail(const absl::Status& status) {
  std::cerr << "dpcore: " << status.ToString() << "\n";
  return kExitError;
}

absl::Status WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  out << text;
  return out ? absl::OkStatus() : absl::InternalError("write failed");
}

// Result goes to --output when given, stdout otherwise.
absl::Status Emit(const Options& opts, const std::string& text) {
  if (!opts.output.empty()) return WriteText(opts.output, text);
  std::cout << text;
  return absl::OkStatus();
}

absl::StatusOr<dpcore::RunConfig> LoadConfig(const Options& opts) {
  absl::StatusOr<dpcore::RunConfig> cfg = dpcore::LoadRunConfig(opts.config_path);
  if (!cfg.ok()) return cfg.status();
  if (opts.seed) cfg->seed = *opts.seed;
  if (!opts.sigma_from.empty()) {
    std::ifstream in(opts.sigma_from);
    if (!in) {
      return absl::NotFoundError(absl::StrCat("cannot open ", opts.sigma_from));
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrCat(opts.sigma_from, ": ", e.what()));
    }
    if (!j.contains("noise_multiplier") || !j["noise_multiplier"].is_number()) {
      return absl::InvalidArgumentError(
          absl::StrCat(opts.sigma_from, ": no numeric noise_multiplier"));
    }
    if (cfg->mechanism == dpcore::Mechanism::kNone) {
      return absl::InvalidArgumentError(
          "--sigma-from makes no sense with mechanism none");
    }
    cfg->privacy.noise_multiplier = j["noise_multiplier"].get<double>();
    cfg->privacy.target_epsilon.reset();
    if (j.contains("delta") && j["delta"].is_number()) {
      cfg->privacy.delta = j["delta"].get<double>();
    }
  }
  if (absl::Status s = dpcore::ValidateRunConfig(*cfg); !s.ok()) return s;
  return cfg;
}

int RunTrain(const Options& opts) {
  absl::StatusOr<dpcore::RunConfig> cfg = LoadConfig(opts);
  if (!cfg.ok()) return Fail(cfg.status());
  if (!opts.output.empty()) cfg->report_path = opts.output;
  absl::StatusOr<dpcore::TrainingRun> run = dpcore::Train(*cfg);
  if (!run.ok()) return Fail(run.status());
  if (cfg->report_path.empty()) {
    std::cout << dpcore::TrainReportToJson(run->report).dump(2) << "\n";
  }
  return kExitOk;
}

int RunCalibrate(const Options& opts) {
  absl::StatusOr<dpcore::RunConfig> cfg = LoadConfig(opts);
  if (!cfg.ok()) return Fail(cfg.status());
  if (cfg->mechanism == dpcore::Mechanism::kNone ||
      !cfg->privacy.target_epsilon) {
    return Fail(absl::InvalidArgumentError(
        "calibrate needs a private mechanism and privacy.target_epsilon"));
  }
  absl::StatusOr<dpcore::Dataset> data = dpcore::LoadDataset(cfg->dataset);
  if (!data.ok()) return Fail(data.status());
  absl::StatusOr<dpcore::ResolvedPrivacy> privacy =
      dpcore::ResolvePrivacy(*cfg, data->size());
  if (!privacy.ok()) return Fail(privacy.status());
  nlohmann::json j;
  j["noise_multiplier"] = privacy->noise_multiplier;
  j["epsilon"] = privacy->epsilon;
  j["target_epsilon"] = *cfg->privacy.target_epsilon;
  j["delta"] = cfg->privacy.delta;
  j["sampling_prob"] = privacy->accounted_sampling_prob;
  j["steps"] = cfg->steps;
  j["accounting"] = privacy->accounting;
  std::cerr << "noise_multiplier " << privacy->noise_multiplier << "\n";
  if (absl::Status s = Emit(opts, j.dump(2) + "\n"); !s.ok()) return Fail(s);
  return kExitOk;
}

int RunBenchmark(const Options& opts) {
  absl::StatusOr<dpcore::RunConfig> cfg = LoadConfig(opts);
  if (!cfg.ok()) return Fail(cfg.status());
  absl::StatusOr<dpcore::ThroughputTable> table =
      dpcore::RunThroughputBenchmark(cfg->benchmark, cfg->clip, cfg->seed);
  if (!table.ok()) return Fail(table.status());
  if (absl::Status s = Emit(opts, table->ToCsv()); !s.ok()) return Fail(s);
  return kExitOk;
}

int RunAuditCommand(const Options& opts) {
  absl::StatusOr<dpcore::RunConfig> cfg = LoadConfig(opts);
  if (!cfg.ok()) return Fail(cfg.status());
  absl::StatusOr<dpcore::AuditReport> report =
      dpcore::RunAudit(*cfg, cfg->audit);
  if (!report.ok()) return Fail(report.status());
  if (absl::Status s =
          Emit(opts, dpcore::AuditReportToJson(*report).dump(2) + "\n");
      !s.ok()) {
    return Fail(s);
  }
  if (opts.enforce && !report->pass) {
    std::cerr << "dpcore: audit failed: empirical epsilon exceeds "
              << report->epsilon_theory << "\n";
    return kExitAuditFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private training toolkit"};
  app.require_subcommand(1);
  Options opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON run config")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "Override the config seed");
    sub->add_option("--output", opts.output, "Write the result here");
  };
  CLI::App* train = app.add_subcommand("train", "Train and emit a report");
  add_common(train);
  train->add_option("--sigma-from", opts.sigma_from,
                    "Take the noise multiplier from calibrate output");
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Noise multiplier for a target epsilon");
  add_common(calibrate);
  CLI::App* bench =
      app.add_subcommand("benchmark", "Private vs non-private throughput");
  add_common(bench);
  CLI::App* audit = app.add_subcommand("audit", "Empirical privacy audit");
  add_common(audit);
  audit->add_option("--sigma-from", opts.sigma_from,
                    "Take the noise multiplier from calibrate output");
  audit->add_flag("--enforce", opts.enforce, "Exit 1 unless the audit passes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  if (train->parsed()) return RunTrain(opts);
  if (calibrate->parsed()) return RunCalibrate(opts);
  if (bench->parsed()) return RunBenchmark(opts);
  return RunAuditCommand(opts);
}
