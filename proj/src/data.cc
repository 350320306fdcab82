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

#include "dpcore/data.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "absl/strings/ascii.h"
#include "dpcore/prng.h"

namespace dpcore {
namespace {

bool ParseDouble(absl::string_view s, double& out) {
  s = absl::StripAsciiWhitespace(s);
  if (s == "nan" || s == "NaN") {
    out = std::nan("");
    return true;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

absl::StatusOr<Dataset> SyntheticDataset(const DatasetSource& source) {
  if (source.n < 1 || source.d < 1) {
    return absl::InvalidArgumentError("synthetic dataset needs n, d >= 1");
  }
  const PrngKey key = Seed(source.seed);
  const std::size_t n = source.n, d = source.d;
  std::vector<double> x(n * d);
  FillGaussian(FoldIn(key, 0), 1.0, x);
  std::vector<double> w(d);
  FillGaussian(FoldIn(key, 1), 1.0, w);
  double wn = 0.0;
  for (double v : w) wn += v * v;
  wn = std::sqrt(wn);
  for (double& v : w) v *= source.signal / wn;
  std::vector<double> u(n);
  if (source.task == TaskKind::kBinaryClassification) {
    FillUniform(FoldIn(key, 2), u);
  } else {
    FillGaussian(FoldIn(key, 3), source.noise, u);
  }

  Dataset ds;
  ds.feature_dim = d;
  ds.task = source.task;
  ds.examples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Example& ex = ds.examples[i];
    ex.features.assign(x.begin() + i * d, x.begin() + (i + 1) * d);
    const double z = Dot(ex.features, w);
    if (source.task == TaskKind::kBinaryClassification) {
      ex.label = u[i] < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : 0.0;
    } else {
      ex.label = z + u[i];
    }
  }
  return ds;
}

absl::StatusOr<Dataset> LoadCsvDataset(const std::string& path,
                                       TaskKind task) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::string line;
  if (!std::getline(in, line)) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": empty file"));
  }
  std::vector<std::string> header = absl::StrSplit(line, ',');
  std::vector<int> feature_col;
  int label_col = -1, group_col = -1;
  std::vector<std::optional<int>> by_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(absl::StripAsciiWhitespace(header[c]));
    if (name == "y") {
      label_col = static_cast<int>(c);
    } else if (name == "group") {
      group_col = static_cast<int>(c);
    } else if (name.size() > 1 && name[0] == 'x') {
      std::size_t idx = 0;
      auto [ptr, ec] =
          std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec != std::errc() || ptr != name.data() + name.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat(path, ": bad column name ", name));
      }
      if (by_index.size() <= idx) by_index.resize(idx + 1);
      if (by_index[idx]) {
        return absl::InvalidArgumentError(
            absl::StrCat(path, ": duplicate column ", name));
      }
      by_index[idx] = static_cast<int>(c);
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": unexpected column ", name));
    }
  }
  if (label_col < 0) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": no y column"));
  }
  for (std::size_t i = 0; i < by_index.size(); ++i) {
    if (!by_index[i]) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": missing column x", i));
    }
    feature_col.push_back(*by_index[i]);
  }
  if (feature_col.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": no features"));
  }

  Dataset ds;
  ds.task = task;
  ds.feature_dim = feature_col.size();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (absl::StripAsciiWhitespace(line).empty()) continue;
    std::vector<absl::string_view> cells = absl::StrSplit(line, ',');
    if (cells.size() != header.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ":", row, ": expected ", header.size(),
                       " cells, got ", cells.size()));
    }
    Example ex;
    ex.features.resize(feature_col.size());
    for (std::size_t f = 0; f < feature_col.size(); ++f) {
      if (!ParseDouble(cells[feature_col[f]], ex.features[f])) {
        return absl::InvalidArgumentError(
            absl::StrCat(path, ":", row, ": bad number in x", f));
      }
    }
    if (!ParseDouble(cells[label_col], ex.label)) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ":", row, ": bad label"));
    }
    if (group_col >= 0) {
      absl::string_view g = absl::StripAsciiWhitespace(cells[group_col]);
      std::int64_t gid = 0;
      auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), gid);
      if (ec != std::errc() || ptr != g.data() + g.size()) {
        return absl::InvalidArgumentError(
            absl::StrCat(path, ":", row, ": bad group"));
      }
      ex.group = gid;
    }
    ds.examples.push_back(std::move(ex));
  }
  if (absl::Status s = ValidateDataset(ds); !s.ok()) return s;
  return ds;
}

absl::Status WriteCsvDataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  bool groups = false;
  for (const Example& ex : dataset.examples) groups |= ex.group.has_value();
  std::vector<std::string> header;
  for (std::size_t i = 0; i < dataset.feature_dim; ++i) {
    header.push_back(absl::StrCat("x", i));
  }
  header.push_back("y");
  if (groups) header.push_back("group");
  out << absl::StrJoin(header, ",") << "\n";
  out.precision(17);
  for (const Example& ex : dataset.examples) {
    for (double v : ex.features) out << v << ",";
    out << ex.label;
    if (groups) out << "," << ex.group.value_or(0);
    out << "\n";
  }
  return out ? absl::OkStatus() : absl::InternalError("write failed");
}

absl::StatusOr<Dataset> LoadDataset(const DatasetSource& source) {
  if (source.kind == DatasetSource::Kind::kCsv) {
    return LoadCsvDataset(source.path, source.task);
  }
  return SyntheticDataset(source);
}

}  // namespace dpcore
