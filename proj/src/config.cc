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

#include "dpcore/config.h"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

using nlohmann::json;

template <typename E>
using NameTable = std::vector<std::pair<const char*, E>>;

const NameTable<ModelKind>& ModelKinds() {
  static const auto* t = new NameTable<ModelKind>{
      {"linear", ModelKind::kLinearRegression},
      {"logistic", ModelKind::kLogisticRegression},
      {"mlp", ModelKind::kMlp}};
  return *t;
}
const NameTable<Activation>& Activations() {
  static const auto* t = new NameTable<Activation>{
      {"relu", Activation::kRelu}, {"tanh", Activation::kTanh}};
  return *t;
}
const NameTable<LossKind>& Losses() {
  static const auto* t = new NameTable<LossKind>{
      {"squared", LossKind::kSquared}, {"logistic", LossKind::kLogistic}};
  return *t;
}
const NameTable<TaskKind>& Tasks() {
  static const auto* t = new NameTable<TaskKind>{
      {"regression", TaskKind::kRegression},
      {"binary", TaskKind::kBinaryClassification}};
  return *t;
}
const NameTable<Mechanism>& Mechanisms() {
  static const auto* t = new NameTable<Mechanism>{
      {"none", Mechanism::kNone},
      {"dpsgd", Mechanism::kDpSgd},
      {"banded-mf", Mechanism::kBandedMf}};
  return *t;
}
const NameTable<BatchStrategy>& Strategies() {
  static const auto* t = new NameTable<BatchStrategy>{
      {"poisson", BatchStrategy::kPoisson},
      {"cyclic-poisson", BatchStrategy::kCyclicPoisson},
      {"shuffled-fixed", BatchStrategy::kShuffledFixed},
      {"truncated-poisson", BatchStrategy::kTruncatedPoisson}};
  return *t;
}
const NameTable<ClipGeometry>& Geometries() {
  static const auto* t = new NameTable<ClipGeometry>{
      {"l2", ClipGeometry::kL2},
      {"l1", ClipGeometry::kL1},
      {"linf", ClipGeometry::kLinf}};
  return *t;
}
const NameTable<ClipLevel>& Levels() {
  static const auto* t = new NameTable<ClipLevel>{
      {"example", ClipLevel::kExample}, {"group", ClipLevel::kGroup}};
  return *t;
}
const NameTable<OptimizerKind>& Optimizers() {
  static const auto* t = new NameTable<OptimizerKind>{
      {"sgd", OptimizerKind::kSgd}, {"adamw", OptimizerKind::kAdamW}};
  return *t;
}
const NameTable<CanaryKind>& CanaryKinds() {
  static const auto* t = new NameTable<CanaryKind>{
      {"label-flip", CanaryKind::kLabelFlip},
      {"gradient-direction", CanaryKind::kGradientDirection}};
  return *t;
}

template <typename E>
std::string NameOf(const NameTable<E>& table, E value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported. Only the first error is kept.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where)
      : json_(j), where_(std::move(where)) {
    if (!j.is_object()) Fail("expected an object");
  }

  bool Has(const char* key) const {
    return json_.is_object() && json_.contains(key) && !json_[key].is_null();
  }

  const json* Sub(const char* key) {
    if (!Has(key)) return nullptr;
    seen_.insert(key);
    return &json_[key];
  }

  template <typename T>
  void Get(const char* key, T& dst) {
    const json* v = Sub(key);
    if (v == nullptr) return;
    try {
      dst = v->get<T>();
    } catch (const json::exception& e) {
      Fail(absl::StrCat(key, ": ", e.what()));
    }
  }

  template <typename T>
  void Get(const char* key, std::optional<T>& dst) {
    if (!Has(key)) return;
    T value{};
    Get(key, value);
    dst = value;
  }

  template <typename E>
  void GetEnum(const char* key, const NameTable<E>& table, E& dst) {
    std::string name;
    if (!Has(key)) return;
    Get(key, name);
    for (const auto& [n, v] : table) {
      if (name == n) {
        dst = v;
        return;
      }
    }
    std::string allowed;
    for (const auto& [n, v] : table) absl::StrAppend(&allowed, " ", n);
    Fail(absl::StrCat(key, ": unknown value \"", name, "\"; allowed:", allowed));
  }

  void Fail(const std::string& message) {
    if (status_.ok()) {
      status_ = absl::InvalidArgumentError(absl::StrCat(where_, ": ", message));
    }
  }

  void Merge(const absl::Status& s) {
    if (status_.ok() && !s.ok()) status_ = s;
  }

  absl::Status Finish() {
    if (status_.ok() && json_.is_object()) {
      for (const auto& [key, value] : json_.items()) {
        if (!seen_.count(key) && !value.is_null()) {
          Fail(absl::StrCat("unknown key \"", key, "\""));
          break;
        }
      }
    }
    return status_;
  }

 private:
  const json& json_;
  std::string where_;
  std::set<std::string> seen_;
  absl::Status status_;
};

LossKind DefaultLoss(TaskKind task) {
  return task == TaskKind::kBinaryClassification ? LossKind::kLogistic
                                                 : LossKind::kSquared;
}

absl::Status ParseModel(const json& j, const std::string& where,
                        ModelSpec& model, bool& loss_given) {
  ObjectReader r(j, where);
  r.GetEnum("kind", ModelKinds(), model.kind);
  r.Get("input_dim", model.input_dim);
  r.Get("hidden", model.hidden_dim);
  r.GetEnum("activation", Activations(), model.activation);
  loss_given = r.Has("loss");
  r.GetEnum("loss", Losses(), model.loss);
  if (model.kind == ModelKind::kMlp && model.hidden_dim == 0) {
    model.hidden_dim = 16;
  }
  return r.Finish();
}

json ModelToJson(const ModelSpec& model, bool with_input_dim) {
  json j;
  j["kind"] = NameOf(ModelKinds(), model.kind);
  if (with_input_dim) j["input_dim"] = model.input_dim;
  if (model.kind == ModelKind::kMlp) {
    j["hidden"] = model.hidden_dim;
    j["activation"] = NameOf(Activations(), model.activation);
  }
  j["loss"] = NameOf(Losses(), model.effective_loss());
  return j;
}

absl::Status ParseDataset(const json& j, DatasetSource& ds) {
  ObjectReader r(j, "dataset");
  std::string source = "synthetic";
  r.Get("source", source);
  if (source == "synthetic") {
    ds.kind = DatasetSource::Kind::kSynthetic;
  } else if (source == "csv") {
    ds.kind = DatasetSource::Kind::kCsv;
  } else {
    r.Fail(absl::StrCat("source must be synthetic or csv, got ", source));
  }
  r.GetEnum("task", Tasks(), ds.task);
  r.Get("n", ds.n);
  r.Get("d", ds.d);
  r.Get("seed", ds.seed);
  r.Get("noise", ds.noise);
  r.Get("signal", ds.signal);
  r.Get("path", ds.path);
  if (ds.kind == DatasetSource::Kind::kCsv && ds.path.empty()) {
    r.Fail("csv source needs a path");
  }
  return r.Finish();
}

json DatasetToJson(const DatasetSource& ds) {
  json j;
  j["task"] = NameOf(Tasks(), ds.task);
  if (ds.kind == DatasetSource::Kind::kCsv) {
    j["source"] = "csv";
    j["path"] = ds.path;
    return j;
  }
  j["source"] = "synthetic";
  j["n"] = ds.n;
  j["d"] = ds.d;
  j["seed"] = ds.seed;
  j["noise"] = ds.noise;
  j["signal"] = ds.signal;
  return j;
}

}  // namespace

std::string MechanismName(Mechanism mechanism) {
  return NameOf(Mechanisms(), mechanism);
}

std::string BatchStrategyName(BatchStrategy strategy) {
  return NameOf(Strategies(), strategy);
}

std::vector<BenchmarkModel> ReferenceBenchmarkModels() {
  return {
      {"linear", ModelSpec::Linear(64)},
      {"logistic", ModelSpec::Logistic(64)},
      {"mlp", ModelSpec::Mlp(64, 128, Activation::kRelu, LossKind::kLogistic)},
  };
}

absl::StatusOr<RunConfig> ParseRunConfig(const json& j) {
  RunConfig cfg;
  ObjectReader r(j, "config");
  if (const json* ds = r.Sub("dataset")) r.Merge(ParseDataset(*ds, cfg.dataset));

  bool loss_given = false;
  if (const json* m = r.Sub("model")) {
    r.Merge(ParseModel(*m, "model", cfg.model, loss_given));
  }
  if (!loss_given) cfg.model.loss = DefaultLoss(cfg.dataset.task);

  r.GetEnum("mechanism", Mechanisms(), cfg.mechanism);

  bool accounting_given = false;
  if (const json* p = r.Sub("privacy")) {
    if (cfg.mechanism == Mechanism::kNone) {
      r.Fail("mechanism none takes no privacy section");
    }
    ObjectReader pr(*p, "privacy");
    pr.Get("target_epsilon", cfg.privacy.target_epsilon);
    pr.Get("noise_multiplier", cfg.privacy.noise_multiplier);
    pr.Get("delta", cfg.privacy.delta);
    if (pr.Has("accounting")) {
      accounting_given = true;
      std::string mode;
      pr.Get("accounting", mode);
      if (mode == "amplified") {
        cfg.privacy.amplified = true;
      } else if (mode == "unamplified") {
        cfg.privacy.amplified = false;
      } else {
        pr.Fail("accounting must be amplified or unamplified");
      }
    }
    r.Merge(pr.Finish());
  }
  if (cfg.mechanism == Mechanism::kBandedMf && !accounting_given) {
    cfg.privacy.amplified = false;
  }

  if (const json* c = r.Sub("clip")) {
    ObjectReader cr(*c, "clip");
    cr.Get("norm", cfg.clip.clip_norm);
    cr.GetEnum("geometry", Geometries(), cfg.clip.geometry);
    cr.GetEnum("level", Levels(), cfg.clip.level);
    if (cr.Has("microbatch_size")) {
      const json* mb = cr.Sub("microbatch_size");
      if (mb->is_string() && mb->get<std::string>() == "full") {
        cfg.clip.microbatch_size = 0;
      } else {
        cr.Get("microbatch_size", cfg.clip.microbatch_size);
      }
    }
    r.Merge(cr.Finish());
  }

  if (const json* b = r.Sub("batch")) {
    ObjectReader br(*b, "batch");
    br.GetEnum("strategy", Strategies(), cfg.batch.strategy);
    br.Get("sampling_prob", cfg.batch.sampling_prob);
    br.Get("batch_size", cfg.batch.batch_size);
    br.Get("max_batch_size", cfg.batch.max_batch_size);
    br.Get("pad_buckets", cfg.batch.pad_buckets);
    r.Merge(br.Finish());
  }

  if (const json* s = r.Sub("strategy")) {
    ObjectReader sr(*s, "strategy");
    sr.Get("band", cfg.strategy.band);
    sr.Get("coefficients", cfg.strategy.coefficients);
    sr.Get("optimize_iterations", cfg.strategy.optimize_iterations);
    sr.Get("step_size", cfg.strategy.step_size);
    if (!cfg.strategy.coefficients.empty() && !sr.Has("band")) {
      cfg.strategy.band = cfg.strategy.coefficients.size();
    }
    r.Merge(sr.Finish());
  }

  if (const json* o = r.Sub("optimizer")) {
    ObjectReader orr(*o, "optimizer");
    orr.GetEnum("kind", Optimizers(), cfg.optimizer.kind);
    orr.Get("learning_rate", cfg.optimizer.adamw.learning_rate);
    orr.Get("beta1", cfg.optimizer.adamw.beta1);
    orr.Get("beta2", cfg.optimizer.adamw.beta2);
    orr.Get("eps", cfg.optimizer.adamw.epsilon);
    orr.Get("weight_decay", cfg.optimizer.adamw.weight_decay);
    r.Merge(orr.Finish());
  }

  r.Get("steps", cfg.steps);
  r.Get("seed", cfg.seed);
  r.Get("eval_every", cfg.eval_every);
  r.Get("report_path", cfg.report_path);

  if (const json* b = r.Sub("benchmark")) {
    ObjectReader br(*b, "benchmark");
    br.Get("warmup_steps", cfg.benchmark.warmup_steps);
    br.Get("measured_steps", cfg.benchmark.measured_steps);
    br.Get("min_batch_size", cfg.benchmark.min_batch_size);
    br.Get("max_batch_size", cfg.benchmark.max_batch_size);
    br.Get("noise_multiplier", cfg.benchmark.noise_multiplier);
    if (const json* models = br.Sub("models")) {
      if (!models->is_array()) br.Fail("models must be an array");
      for (std::size_t i = 0; models->is_array() && i < models->size(); ++i) {
        const json& mj = (*models)[i];
        BenchmarkModel bm;
        bm.name = mj.value("name", absl::StrCat("model", i));
        json spec = mj;
        spec.erase("name");
        bool given = false;
        br.Merge(ParseModel(spec, absl::StrCat("benchmark.models[", i, "]"),
                            bm.spec, given));
        if (!given) bm.spec.loss = bm.spec.effective_loss();
        cfg.benchmark.models.push_back(std::move(bm));
      }
    }
    r.Merge(br.Finish());
  }

  if (const json* a = r.Sub("audit")) {
    ObjectReader ar(*a, "audit");
    ar.Get("canaries", cfg.audit.canaries);
    ar.GetEnum("kind", CanaryKinds(), cfg.audit.kind);
    ar.Get("guesses_per_side", cfg.audit.guesses_per_side);
    ar.Get("confidence", cfg.audit.confidence);
    ar.Get("claimed_epsilon", cfg.audit.claimed_epsilon);
    ar.Get("feature_norm", cfg.audit.canary_options.feature_norm);
    r.Merge(ar.Finish());
  }

  if (absl::Status s = r.Finish(); !s.ok()) return s;
  if (cfg.dataset.kind == DatasetSource::Kind::kSynthetic) {
    cfg.model.input_dim = cfg.dataset.d;
  }
  if (absl::Status s = ValidateRunConfig(cfg); !s.ok()) return s;
  return cfg;
}

absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": malformed JSON: ", e.what()));
  }
  return ParseRunConfig(j);
}

json RunConfigToJson(const RunConfig& cfg) {
  json j;
  j["model"] = ModelToJson(cfg.model, false);
  j["dataset"] = DatasetToJson(cfg.dataset);
  j["mechanism"] = MechanismName(cfg.mechanism);
  if (cfg.mechanism == Mechanism::kNone) {
    j["privacy"] = nullptr;
  } else {
    json p;
    p["target_epsilon"] = cfg.privacy.target_epsilon
                              ? json(*cfg.privacy.target_epsilon)
                              : json(nullptr);
    p["noise_multiplier"] = cfg.privacy.noise_multiplier
                                ? json(*cfg.privacy.noise_multiplier)
                                : json(nullptr);
    p["delta"] = cfg.privacy.delta;
    p["accounting"] = cfg.privacy.amplified ? "amplified" : "unamplified";
    j["privacy"] = p;
  }
  j["clip"] = {
      {"norm", cfg.clip.clip_norm},
      {"geometry", NameOf(Geometries(), cfg.clip.geometry)},
      {"level", NameOf(Levels(), cfg.clip.level)},
      {"microbatch_size", cfg.clip.microbatch_size == 0
                              ? json("full")
                              : json(cfg.clip.microbatch_size)}};
  json b;
  b["strategy"] = BatchStrategyName(cfg.batch.strategy);
  if (cfg.batch.strategy == BatchStrategy::kShuffledFixed) {
    b["batch_size"] = cfg.batch.batch_size;
  } else {
    b["sampling_prob"] = cfg.batch.sampling_prob;
  }
  b["max_batch_size"] = cfg.batch.max_batch_size
                            ? json(*cfg.batch.max_batch_size)
                            : json(nullptr);
  b["pad_buckets"] = cfg.batch.pad_buckets;
  j["batch"] = b;
  if (cfg.mechanism == Mechanism::kBandedMf) {
    j["strategy"] = {{"band", cfg.strategy.band},
                     {"coefficients", cfg.strategy.coefficients},
                     {"optimize_iterations", cfg.strategy.optimize_iterations},
                     {"step_size", cfg.strategy.step_size}};
  }
  json o;
  o["kind"] = NameOf(Optimizers(), cfg.optimizer.kind);
  o["learning_rate"] = cfg.optimizer.adamw.learning_rate;
  if (cfg.optimizer.kind == OptimizerKind::kAdamW) {
    o["beta1"] = cfg.optimizer.adamw.beta1;
    o["beta2"] = cfg.optimizer.adamw.beta2;
    o["eps"] = cfg.optimizer.adamw.epsilon;
    o["weight_decay"] = cfg.optimizer.adamw.weight_decay;
  }
  j["optimizer"] = o;
  j["steps"] = cfg.steps;
  j["seed"] = cfg.seed;
  j["eval_every"] = cfg.eval_every;
  j["report_path"] = cfg.report_path;

  const BenchmarkOptions& bo = cfg.benchmark;
  json models = json::array();
  for (const BenchmarkModel& bm :
       bo.models.empty() ? ReferenceBenchmarkModels() : bo.models) {
    json mj = ModelToJson(bm.spec, true);
    mj["name"] = bm.name;
    models.push_back(std::move(mj));
  }
  j["benchmark"] = {{"warmup_steps", bo.warmup_steps},
                    {"measured_steps", bo.measured_steps},
                    {"min_batch_size", bo.min_batch_size},
                    {"max_batch_size", bo.max_batch_size},
                    {"noise_multiplier", bo.noise_multiplier},
                    {"models", std::move(models)}};
  const AuditConfig& a = cfg.audit;
  j["audit"] = {{"canaries", a.canaries},
                {"kind", NameOf(CanaryKinds(), a.kind)},
                {"guesses_per_side", a.guesses_per_side},
                {"confidence", a.confidence},
                {"claimed_epsilon", a.claimed_epsilon ? json(*a.claimed_epsilon)
                                                      : json(nullptr)},
                {"feature_norm", a.canary_options.feature_norm}};
  return j;
}

absl::Status ValidateRunConfig(const RunConfig& cfg) {
  const PrivacyConfig& p = cfg.privacy;
  if (cfg.mechanism == Mechanism::kNone) {
    if (p.target_epsilon || p.noise_multiplier) {
      return absl::InvalidArgumentError(
          "mechanism none is a non-private baseline and takes no privacy "
          "fields");
    }
  } else {
    if (p.target_epsilon.has_value() == p.noise_multiplier.has_value()) {
      return absl::InvalidArgumentError(
          "give exactly one of privacy.target_epsilon and "
          "privacy.noise_multiplier");
    }
    if (p.target_epsilon && !(*p.target_epsilon > 0.0)) {
      return absl::InvalidArgumentError("target_epsilon must be positive");
    }
    if (p.noise_multiplier &&
        !(*p.noise_multiplier >= 0.0 && std::isfinite(*p.noise_multiplier))) {
      return absl::InvalidArgumentError(
          "noise_multiplier must be finite and non-negative");
    }
    if (!(p.delta > 0.0 && p.delta < 1.0)) {
      return absl::InvalidArgumentError("delta must lie in (0, 1)");
    }
    const bool poisson = cfg.batch.strategy != BatchStrategy::kShuffledFixed;
    if (cfg.mechanism == Mechanism::kDpSgd && p.amplified && !poisson) {
      return absl::FailedPreconditionError(
          "shuffled fixed-size batches cannot use amplified accounting; set "
          "privacy.accounting to \"unamplified\"");
    }
    if (cfg.mechanism == Mechanism::kBandedMf && p.amplified) {
      return absl::FailedPreconditionError(
          "banded matrix factorization is only accounted without "
          "amplification; set privacy.accounting to \"unamplified\"");
    }
  }
  if (cfg.mechanism == Mechanism::kBandedMf) {
    if (cfg.strategy.band < 1) {
      return absl::InvalidArgumentError("strategy.band must be at least 1");
    }
    if (!cfg.strategy.coefficients.empty() &&
        cfg.strategy.coefficients.size() != cfg.strategy.band) {
      return absl::InvalidArgumentError(
          "strategy.coefficients length differs from strategy.band");
    }
    if (cfg.steps < cfg.strategy.band) {
      return absl::InvalidArgumentError("steps must be at least strategy.band");
    }
  }
  if (cfg.steps < 1) return absl::InvalidArgumentError("steps must be >= 1");
  if (cfg.batch.strategy == BatchStrategy::kTruncatedPoisson &&
      !cfg.batch.pad_buckets.empty() && cfg.batch.max_batch_size &&
      cfg.batch.pad_buckets.back() < *cfg.batch.max_batch_size) {
    return absl::InvalidArgumentError(
        "largest pad bucket is smaller than max_batch_size");
  }
  if (absl::Status s = ValidateClipConfig(cfg.clip); !s.ok()) return s;
  if (cfg.optimizer.adamw.learning_rate < 0.0) {
    return absl::InvalidArgumentError("learning_rate must be non-negative");
  }
  if (!(cfg.audit.confidence > 0.0 && cfg.audit.confidence < 1.0)) {
    return absl::InvalidArgumentError("audit.confidence must lie in (0, 1)");
  }
  return absl::OkStatus();
}

}  // namespace dpcore
