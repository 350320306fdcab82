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

#ifndef DPCORE_DATA_H_
#define DPCORE_DATA_H_

#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/config.h"
#include "dpcore/model.h"

namespace dpcore {

// Gaussian features x ~ N(0, I_d) and a random true weight vector w* with
// norm `signal`. Regression: y = <w*, x> + noise * N(0, 1). Binary: y ~
// Bernoulli(sigmoid(<w*, x>)).
absl::StatusOr<Dataset> SyntheticDataset(const DatasetSource& source);

// Header row with columns x0..x{d-1}, y and an optional integer `group`.
// Column order in the file is free.
absl::StatusOr<Dataset> LoadCsvDataset(const std::string& path, TaskKind task);

absl::Status WriteCsvDataset(const Dataset& dataset, const std::string& path);

absl::StatusOr<Dataset> LoadDataset(const DatasetSource& source);

}  // namespace dpcore

#endif  // DPCORE_DATA_H_
