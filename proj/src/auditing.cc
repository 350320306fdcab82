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

#include "dpcore/auditing.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace dpcore {
namespace {

double LogChoose(std::size_t n, std::size_t k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// P[Binomial(n, p) <= x].
double BinomialCdf(std::size_t n, double p, std::size_t x) {
  if (x >= n) return 1.0;
  return 1.0 - BinomialUpperTail(n, p, x + 1);
}

}  // namespace

absl::StatusOr<CanarySet> AssignCanaries(std::size_t m, CanaryKind kind,
                                         const Dataset& base,
                                         const PrngKey& key,
                                         const ModelSpec& model,
                                         const GradientVector& init_params,
                                         const CanaryOptions& options) {
  if (m < 1) return absl::InvalidArgumentError("need at least one canary");
  CanarySet set;
  set.kind = kind;
  set.init_params = init_params;

  std::vector<double> coins(m);
  FillUniform(FoldIn(key, 0), coins);
  set.included.reserve(m);
  for (double u : coins) set.included.push_back(u < 0.5);

  if (kind == CanaryKind::kLabelFlip) {
    if (base.task != TaskKind::kBinaryClassification) {
      return absl::InvalidArgumentError(
          "label-flip canaries need a binary-classification dataset");
    }
    if (base.size() < m) {
      return absl::InvalidArgumentError(absl::StrCat(
          "cannot hold out ", m, " canaries from ", base.size(), " examples"));
    }
    std::vector<std::size_t> order(base.size());
    std::iota(order.begin(), order.end(), 0);
    PrngStream stream(FoldIn(key, 1));
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(order[i], order[i + stream.NextBelow(order.size() - i)]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      Example ex = base.examples[order[i]];
      ex.label = ex.label > 0.5 ? 0.0 : 1.0;
      ex.group.reset();
      set.canaries.push_back(std::move(ex));
      set.source_indices.push_back(order[i]);
    }
    return set;
  }

  const std::size_t d = model.input_dim;
  const double norm =
      options.feature_norm > 0.0 ? options.feature_norm : std::sqrt(double(d));
  std::vector<double> label_coins(m);
  FillUniform(FoldIn(key, 3), label_coins);
  for (std::size_t i = 0; i < m; ++i) {
    Example ex;
    ex.features.resize(d);
    FillGaussian(FoldIn(FoldIn(key, 2), i), 1.0, ex.features);
    double len = 0.0;
    for (double v : ex.features) len += v * v;
    len = std::sqrt(len);
    for (double& v : ex.features) v *= norm / len;
    if (model.effective_loss() == LossKind::kLogistic) {
      ex.label = label_coins[i] < 0.5 ? 0.0 : 1.0;
    } else {
      ex.label = label_coins[i] < 0.5 ? -1.0 : 1.0;
    }
    absl::StatusOr<GradientVector> g = PerExampleGrad(model, init_params, ex);
    if (!g.ok()) return g.status();
    const double gnorm = g->NormL2();
    if (!(gnorm > 0.0) || !std::isfinite(gnorm)) {
      return absl::InternalError("canary gradient at init is degenerate");
    }
    g->Scale(-1.0 / gnorm);
    set.directions.push_back(*std::move(g));
    set.canaries.push_back(std::move(ex));
  }
  return set;
}

absl::StatusOr<std::vector<double>> ScoreCanaries(
    const ModelSpec& model, const GradientVector& final_params,
    const CanarySet& canaries) {
  std::vector<double> scores;
  scores.reserve(canaries.size());
  if (canaries.kind == CanaryKind::kLabelFlip) {
    for (const Example& ex : canaries.canaries) {
      absl::StatusOr<double> loss = PerExampleLoss(model, final_params, ex);
      if (!loss.ok()) return loss.status();
      scores.push_back(-*loss);
    }
    return scores;
  }
  GradientVector delta = final_params;
  if (absl::Status s = delta.AddScaled(canaries.init_params, -1.0); !s.ok()) {
    return s;
  }
  for (const GradientVector& dir : canaries.directions) {
    scores.push_back(Dot(delta.values(), dir.values()));
  }
  return scores;
}

std::vector<Guess> MedianThresholdGuesses(const std::vector<double>& scores) {
  std::vector<Guess> out(scores.size(), Guess::kOut);
  if (scores.empty()) return out;
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i] > median) out[i] = Guess::kIn;
  }
  return out;
}

std::vector<Guess> TopBottomGuesses(const std::vector<double>& scores,
                                    std::size_t k) {
  const std::size_t n = scores.size();
  k = std::min(k, n / 2);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Stable on ties so the guesses are deterministic.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  std::vector<Guess> out(n, Guess::kAbstain);
  for (std::size_t i = 0; i < k; ++i) {
    out[order[i]] = Guess::kIn;
    out[order[n - 1 - i]] = Guess::kOut;
  }
  return out;
}

double BinomialUpperTail(std::size_t n, double p, std::size_t v) {
  if (v == 0) return 1.0;
  if (v > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double log_p = std::log(p);
  const double log_1mp = std::log1p(-p);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(n - v + 1);
  for (std::size_t k = v; k <= n; ++k) {
    const double t = LogChoose(n, k) + k * log_p + (n - k) * log_1mp;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return std::min(1.0, std::exp(max_term + std::log(acc)));
}

double ClopperPearsonUpper(std::size_t successes, std::size_t trials,
                           double confidence) {
  if (trials == 0 || successes >= trials) return 1.0;
  const double alpha = 1.0 - confidence;
  if (successes == 0) return 1.0 - std::pow(alpha, 1.0 / double(trials));
  // CDF(successes; p) decreases in p; find where it equals alpha.
  double lo = double(successes) / double(trials), hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (BinomialCdf(trials, mid, successes) > alpha ? lo : hi) = mid;
  }
  return hi;
}

absl::StatusOr<double> ClopperPearsonEpsilon(const std::vector<Guess>& guesses,
                                             const std::vector<bool>& truth,
                                             double delta, double confidence) {
  if (guesses.size() != truth.size()) {
    return absl::InvalidArgumentError("guesses and truth differ in length");
  }
  std::size_t positives = 0, negatives = 0, false_pos = 0, false_neg = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (guesses[i] == Guess::kAbstain) {
      return absl::InvalidArgumentError(
          "Clopper-Pearson auditing needs an in/out decision for every canary");
    }
    if (truth[i]) {
      ++positives;
      if (guesses[i] == Guess::kOut) ++false_neg;
    } else {
      ++negatives;
      if (guesses[i] == Guess::kIn) ++false_pos;
    }
  }
  if (positives == 0 || negatives == 0) {
    return absl::InvalidArgumentError(
        "need at least one included and one excluded canary");
  }
  const double fpr = ClopperPearsonUpper(false_pos, negatives, confidence);
  const double fnr = ClopperPearsonUpper(false_neg, positives, confidence);
  double eps = 0.0;
  auto branch = [&](double numer, double denom) {
    if (numer <= 0.0 || denom <= 0.0) return;
    eps = std::max(eps, std::log(numer / denom));
  };
  branch(1.0 - delta - fnr, fpr);
  branch(1.0 - delta - fpr, fnr);
  return eps;
}

absl::StatusOr<double> OneRunEpsilon(std::size_t r, std::size_t v,
                                     std::size_t m, double confidence) {
  if (v > r) {
    return absl::InvalidArgumentError(
        absl::StrCat("correct guesses ", v, " exceed guesses made ", r));
  }
  if (r > m) {
    return absl::InvalidArgumentError(
        absl::StrCat("guesses made ", r, " exceed canaries ", m));
  }
  if (2 * v <= r) return 0.0;
  const double alpha = 1.0 - confidence;
  auto tail = [&](double eps) {
    const double p = 1.0 / (1.0 + std::exp(-eps));
    return BinomialUpperTail(r, p, v);
  };
  if (tail(0.0) >= alpha) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (tail(hi) < alpha) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) return hi;
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) < alpha ? lo : hi) = mid;
  }
  return lo;
}

nlohmann::json AuditReportToJson(const AuditReport& report) {
  nlohmann::json j;
  j["epsilon_theory"] = std::isfinite(report.epsilon_theory)
                            ? nlohmann::json(report.epsilon_theory)
                            : nlohmann::json(nullptr);
  j["epsilon_cp"] = report.epsilon_cp;
  j["epsilon_one_run"] = report.epsilon_one_run;
  j["confidence"] = report.confidence;
  j["delta"] = report.delta;
  j["m"] = report.m;
  j["r"] = report.r;
  j["v"] = report.v;
  j["pass"] = report.pass;
  return j;
}

absl::StatusOr<AuditReport> EvaluateAudit(const std::vector<double>& scores,
                                          const std::vector<bool>& truth,
                                          double epsilon_theory, double delta,
                                          const AuditConfig& config) {
  if (scores.size() != truth.size()) {
    return absl::InvalidArgumentError("scores and truth differ in length");
  }
  AuditReport report;
  report.scores = scores;
  report.truth = truth;
  report.m = scores.size();
  report.confidence = config.confidence;
  report.delta = delta;
  report.epsilon_theory = epsilon_theory;

  absl::StatusOr<double> cp = ClopperPearsonEpsilon(
      MedianThresholdGuesses(scores), truth, delta, config.confidence);
  if (!cp.ok()) return cp.status();
  report.epsilon_cp = *cp;

  const std::size_t k = config.guesses_per_side == 0 ? report.m / 10
                                                     : config.guesses_per_side;
  report.guesses = TopBottomGuesses(scores, k);
  for (std::size_t i = 0; i < report.m; ++i) {
    if (report.guesses[i] == Guess::kAbstain) continue;
    ++report.r;
    if ((report.guesses[i] == Guess::kIn) == truth[i]) ++report.v;
  }
  absl::StatusOr<double> one_run =
      OneRunEpsilon(report.r, report.v, report.m, config.confidence);
  if (!one_run.ok()) return one_run.status();
  report.epsilon_one_run = *one_run;
  report.pass =
      std::max(report.epsilon_cp, report.epsilon_one_run) <= epsilon_theory;
  return report;
}

}  // namespace dpcore
