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

#include "dpcore/throughput.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <optional>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpcore/clipping.h"
#include "dpcore/model.h"
#include "dpcore/optimizer.h"
#include "dpcore/privatizer.h"
#include "dpcore/prng.h"

namespace dpcore {
namespace {

std::vector<Example> DummyBatch(const ModelSpec& model, std::size_t size,
                                const PrngKey& key) {
  std::vector<double> x(size * model.input_dim);
  FillGaussian(FoldIn(key, 0), 1.0, x);
  std::vector<double> u(size);
  FillUniform(FoldIn(key, 1), u);
  std::vector<Example> batch(size);
  for (std::size_t i = 0; i < size; ++i) {
    batch[i].features.assign(x.begin() + i * model.input_dim,
                             x.begin() + (i + 1) * model.input_dim);
    batch[i].label = u[i] < 0.5 ? 0.0 : 1.0;
  }
  return batch;
}

// One optimizer step; `privatizer` empty means non-private.
absl::Status Step(const ModelSpec& model, const std::vector<Example>& batch,
                  const ClipConfig& clip,
                  const std::optional<Privatizer>& privatizer,
                  std::optional<PrivatizerState>& noise,
                  GradientVector& params, OptimizerState& opt) {
  GradientVector grad;
  if (privatizer) {
    absl::StatusOr<ClippedGradientSum> sum =
        ClippedGradSum(model, params, batch, clip);
    if (!sum.ok()) return sum.status();
    auto noisy = Privatize(*privatizer, *sum, *std::move(noise));
    if (!noisy.ok()) return noisy.status();
    grad = std::move(noisy->first);
    noise = std::move(noisy->second);
  } else {
    absl::StatusOr<GradientVector> g = BatchGradSum(model, params, batch);
    if (!g.ok()) return g.status();
    grad = *std::move(g);
  }
  grad.Scale(1.0 / double(batch.size()));
  auto update = AdamWUpdate(AdamWConfig{}, grad, std::move(opt), params);
  if (!update.ok()) return update.status();
  opt = std::move(update->second);
  return ApplyUpdates(params, update->first);
}

}  // namespace

std::string ThroughputTable::ToCsv() const {
  std::string out = "model,size,mechanism,batch_size,examples_per_sec,relative\n";
  for (const ThroughputRow& r : rows) {
    absl::StrAppend(&out, r.model, ",", r.size, ",", r.mechanism, ",",
                    r.batch_size == 0 ? std::string("max")
                                      : absl::StrCat(r.batch_size),
                    ",", absl::StrFormat("%.2f", r.examples_per_sec), ",",
                    r.relative > 0.0 ? absl::StrFormat("%.4f", r.relative)
                                     : std::string(""),
                    "\n");
  }
  return out;
}

std::vector<std::size_t> PowerOfTwoSweep(std::size_t min_batch,
                                         std::size_t max_batch) {
  min_batch = std::bit_ceil(std::max<std::size_t>(min_batch, 1));
  max_batch = std::bit_floor(std::max(max_batch, min_batch));
  std::vector<std::size_t> out;
  for (std::size_t b = min_batch; b <= max_batch; b *= 2) out.push_back(b);
  return out;
}

absl::StatusOr<ThroughputTable> RunThroughputBenchmark(
    const BenchmarkOptions& options, const ClipConfig& clip,
    std::uint64_t seed) {
  if (options.measured_steps < 1) {
    return absl::InvalidArgumentError("measured_steps must be >= 1");
  }
  if (options.min_batch_size < 1 ||
      options.max_batch_size < options.min_batch_size) {
    return absl::InvalidArgumentError(
        "benchmark needs 1 <= min_batch_size <= max_batch_size");
  }
  const std::vector<BenchmarkModel> models =
      options.models.empty() ? ReferenceBenchmarkModels() : options.models;
  const std::vector<std::size_t> sweep =
      PowerOfTwoSweep(options.min_batch_size, options.max_batch_size);
  const PrngKey root = Seed(seed);

  ThroughputTable table;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const BenchmarkModel& bm = models[mi];
    absl::StatusOr<GradientVector> init =
        InitParams(bm.spec, FoldIn(root, 2 * mi));
    if (!init.ok()) return init.status();
    double best[2] = {0.0, 0.0};
    for (int private_arm = 0; private_arm < 2; ++private_arm) {
      for (std::size_t b : sweep) {
        const std::vector<Example> batch =
            DummyBatch(bm.spec, b, FoldIn(root, 2 * mi + 1));
        GradientVector params = *init;
        OptimizerState opt = AdamWInit(params);
        std::optional<Privatizer> privatizer;
        std::optional<PrivatizerState> noise;
        if (private_arm) {
          absl::StatusOr<Privatizer> p =
              Privatizer::Gaussian(options.noise_multiplier, clip.clip_norm);
          if (!p.ok()) return p.status();
          privatizer = *p;
          absl::StatusOr<PrivatizerState> st =
              InitPrivatizer(*privatizer, params.layout(), FoldIn(root, 99));
          if (!st.ok()) return st.status();
          noise = *std::move(st);
        }
        for (std::size_t s = 0; s < options.warmup_steps; ++s) {
          absl::Status st = Step(bm.spec, batch, clip, privatizer, noise,
                                 params, opt);
          if (!st.ok()) return st;
        }
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t s = 0; s < options.measured_steps; ++s) {
          absl::Status st = Step(bm.spec, batch, clip, privatizer, noise,
                                 params, opt);
          if (!st.ok()) return st;
        }
        const double seconds = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        const double eps = double(b * options.measured_steps) /
                           std::max(seconds, 1e-12);
        best[private_arm] = std::max(best[private_arm], eps);
        table.rows.push_back({bm.name, params.size(),
                              private_arm ? "dpsgd" : "none", b, eps, 0.0});
      }
      table.rows.push_back({bm.name, init->size(),
                            private_arm ? "dpsgd" : "none", 0,
                            best[private_arm],
                            private_arm ? best[1] / best[0] : 1.0});
    }
  }
  return table;
}

}  // namespace dpcore
