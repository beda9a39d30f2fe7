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

#ifndef BYZDP_REPORT_H_
#define BYZDP_REPORT_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "byzdp/engine.h"

namespace byzdp {

// %.17g: round-trips every double.
std::string FormatDouble(double value);

// Metrics CSV columns, in order.
inline constexpr const char* kMetricsColumns[] = {
    "run_id",    "round",  "loss", "grad_norm", "min_sq_grad_norm",
    "accuracy",  "s",      "gamma", "gar",      "attack",
    "f",         "epsilon", "delta", "b",       "seed"};

std::string MetricsCsvHeader();

// Header plus one row per record. accuracy is empty for non-classifiers;
// epsilon and delta are "none" for non-private runs.
std::string FormatMetricsCsv(const std::string& run_id,
                             const RunConfig& config,
                             std::span<const MetricsRecord> records);

// Quantities derivable from a metrics CSV alone.
struct MetricsDigest {
  std::size_t rows = 0;
  double final_loss = 0.0;
  double min_sq_grad_norm = 0.0;
  std::optional<double> final_accuracy;
  std::optional<double> max_accuracy;
};

MetricsDigest DigestMetrics(std::span<const MetricsRecord> records);
absl::StatusOr<MetricsDigest> DigestMetricsCsv(const std::string& csv);

// One row per sweep cell.
std::string FormatSweepSummaryCsv(std::span<const SweepCellResult> results);

// Cells grouped by (b, epsilon, gar, attack, f); mean and sample standard
// deviation of max accuracy over the group's successful cells.
struct AggregateRow {
  int b = 0;
  std::optional<double> epsilon;
  GarRule gar = GarRule::kAverage;
  AttackKind attack = AttackKind::kNone;
  int f = 0;
  int cells_ok = 0;
  int cells_failed = 0;
  std::optional<double> max_accuracy_mean;
  std::optional<double> max_accuracy_std;
  double min_sq_grad_norm_mean = 0.0;
};

std::vector<AggregateRow> AggregateSweep(
    std::span<const SweepCellResult> results);
std::string FormatAggregateCsv(std::span<const AggregateRow> rows);

// Writes via a temporary file and rename.
absl::Status WriteFileAtomic(const std::string& path,
                             const std::string& content);

}  // namespace byzdp

#endif  // BYZDP_REPORT_H_
