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

#ifndef DPCORE_THROUGHPUT_H_
#define DPCORE_THROUGHPUT_H_

#include <cstddef>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpcore/config.h"

namespace dpcore {

struct ThroughputRow {
  std::string model;
  // Parameter count.
  std::size_t size = 0;
  std::string mechanism;
  // 0 marks the per-mechanism summary row (printed as "max").
  std::size_t batch_size = 0;
  double examples_per_sec = 0.0;
  // Summary rows only: private / non-private max throughput.
  double relative = 0.0;
};

struct ThroughputTable {
  std::vector<ThroughputRow> rows;

  // Columns: model,size,mechanism,batch_size,examples_per_sec,relative.
  std::string ToCsv() const;
};

// Batch sizes min, 2 min, 4 min, ... up to max. Both ends are rounded to
// powers of two.
std::vector<std::size_t> PowerOfTwoSweep(std::size_t min_batch,
                                         std::size_t max_batch);

// For every model, mechanism (none, dpsgd) and sweep batch size: run the
// warmup steps untimed, then time the measured steps on dummy data of fixed
// batch size. Throughput is examples processed over elapsed time. Each
// mechanism ends with a "max" row holding its best throughput; the dpsgd one
// also carries the private/non-private ratio. Runs serially.
absl::StatusOr<ThroughputTable> RunThroughputBenchmark(
    const BenchmarkOptions& options, const ClipConfig& clip,
    std::uint64_t seed);

}  // namespace dpcore

#endif  // DPCORE_THROUGHPUT_H_
