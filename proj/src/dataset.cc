// Copyright 2026 The byzdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "byzdp/model.h"

namespace byzdp {
namespace {

bool ParseDouble(absl::string_view text, double& out) {
  text = absl::StripAsciiWhitespace(text);
  if (text.empty()) return false;
  // std::from_chars rejects a leading '+'.
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

absl::StatusOr<Dataset> Dataset::Create(std::vector<DataPoint> points,
                                        std::uint64_t generator_seed) {
  if (points.empty()) {
    return absl::InvalidArgumentError("dataset must contain m >= 1 points");
  }
  const Eigen::Index width = points.front().features.size();
  if (width < 1) {
    return absl::InvalidArgumentError("data points need >= 1 feature");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].features.size() != width) {
      return absl::InvalidArgumentError(
          absl::StrCat("point ", i, " has ", points[i].features.size(),
                       " features, expected ", width));
    }
  }
  return Dataset(
      std::make_shared<const std::vector<DataPoint>>(std::move(points)),
      generator_seed);
}

Dataset Dataset::Head(std::size_t count) const {
  count = std::min(std::max<std::size_t>(count, 1), size());
  return Dataset(std::make_shared<const std::vector<DataPoint>>(
                     points_->begin(), points_->begin() + count),
                 generator_seed_);
}

Dataset Dataset::Tail(std::size_t from) const {
  from = std::min(from, size() - 1);
  return Dataset(std::make_shared<const std::vector<DataPoint>>(
                     points_->begin() + from, points_->end()),
                 generator_seed_);
}

absl::StatusOr<Dataset> MakeTargetCloud(const TargetCloudOptions& options) {
  if (options.m < 1 || options.dim < 1) {
    return absl::InvalidArgumentError("target cloud needs m >= 1 and dim >= 1");
  }
  RandomStream stream =
      DeriveStream(options.seed, 0, 0, StreamPurpose::kDataset);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DataPoint> points(options.m);
  for (DataPoint& p : points) {
    p.features.resize(options.dim);
    for (int j = 0; j < options.dim; ++j) {
      p.features[j] = options.center + options.spread * normal(stream);
    }
  }
  return Dataset::Create(std::move(points), options.seed);
}

absl::StatusOr<Dataset> MakeGaussianBlobs(const BlobOptions& options) {
  if (options.m < 1 || options.dim < 1) {
    return absl::InvalidArgumentError("blobs need m >= 1 and dim >= 1");
  }
  if (!(options.label_noise >= 0.0 && options.label_noise < 0.5)) {
    return absl::InvalidArgumentError("label_noise must lie in [0, 0.5)");
  }
  RandomStream stream =
      DeriveStream(options.seed, 0, 0, StreamPurpose::kDataset);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution flip(options.label_noise);
  // Class means sit at +-separation/2 along a random unit direction. A fixed
  // axis such as (1, ..., 1) would line up with coordinate-wise attacks.
  Vector direction(options.dim);
  for (int j = 0; j < options.dim; ++j) direction[j] = normal(stream);
  direction.normalize();
  const double offset = 0.5 * options.separation;
  std::vector<DataPoint> points(options.m);
  for (DataPoint& p : points) {
    const bool positive = coin(stream);
    const double sign = positive ? 1.0 : -1.0;
    p.features.resize(options.dim);
    for (int j = 0; j < options.dim; ++j) {
      p.features[j] = sign * offset * direction[j] + options.spread * normal(stream);
    }
    const bool flipped = options.label_noise > 0.0 && flip(stream);
    p.label = (positive != flipped) ? 1.0 : 0.0;
  }
  return Dataset::Create(std::move(points), options.seed);
}

absl::StatusOr<Dataset> ParseCsvDataset(absl::string_view text,
                                        bool has_label) {
  std::vector<DataPoint> points;
  std::size_t row = 0;
  std::size_t width = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++row;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    std::vector<double> values;
    bool ok = true;
    for (absl::string_view cell : absl::StrSplit(line, ',')) {
      double v = 0.0;
      if (!ParseDouble(cell, v)) {
        ok = false;
        break;
      }
      values.push_back(v);
    }
    if (!ok) {
      if (points.empty() && width == 0) {
        width = static_cast<std::size_t>(-1);  // header consumed
        continue;
      }
      return absl::InvalidArgumentError(
          absl::StrCat("malformed CSV row ", row, ": '", line, "'"));
    }
    const std::size_t min_cols = has_label ? 2 : 1;
    if (values.size() < min_cols ||
        (!points.empty() && values.size() != width)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "malformed CSV row ", row, ": expected ",
          points.empty() ? min_cols : width, " columns, got ", values.size()));
    }
    width = values.size();
    DataPoint p;
    const std::size_t feature_count = has_label ? width - 1 : width;
    p.features = Eigen::Map<const Vector>(values.data(), feature_count);
    if (has_label) p.label = values.back();
    points.push_back(std::move(p));
  }
  if (points.empty()) {
    return absl::InvalidArgumentError("CSV dataset contains no data rows");
  }
  return Dataset::Create(std::move(points), 0);
}

absl::StatusOr<Dataset> LoadCsvDataset(const std::string& path,
                                       bool has_label) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open dataset '", path, "'"));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsvDataset(buffer.str(), has_label);
}

}  // namespace byzdp
