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

#include "byzdp/report.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "byzdp/config.h"

namespace byzdp {
namespace {

std::string OptionalCell(const std::optional<double>& v) {
  return v.has_value() ? FormatDouble(*v) : "";
}

std::string EpsilonCell(const std::optional<double>& e) {
  return e.has_value() ? FormatDouble(*e) : "none";
}

std::optional<double> EpsilonOf(const RunConfig& c) {
  if (!c.privacy.has_value()) return std::nullopt;
  return c.privacy->epsilon;
}

}  // namespace

std::string FormatDouble(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string MetricsCsvHeader() {
  return absl::StrJoin(kMetricsColumns, ",");
}

std::string FormatMetricsCsv(const std::string& run_id,
                             const RunConfig& config,
                             std::span<const MetricsRecord> records) {
  std::string out = absl::StrCat(MetricsCsvHeader(), "\n");
  const std::string gar(GarRuleName(config.gar));
  const std::string attack(AttackKindName(config.attack.kind));
  const std::string epsilon = EpsilonCell(EpsilonOf(config));
  const std::string delta = config.privacy.has_value()
                                ? FormatDouble(config.privacy->delta)
                                : "none";
  for (const MetricsRecord& r : records) {
    absl::StrAppend(&out, run_id, ",", r.round, ",", FormatDouble(r.loss), ",",
                    FormatDouble(r.grad_norm), ",",
                    FormatDouble(r.min_sq_grad_norm), ",",
                    OptionalCell(r.accuracy), ",", FormatDouble(r.s), ",",
                    FormatDouble(r.gamma), ",", gar, ",", attack, ",",
                    config.f, ",", epsilon, ",", delta, ",", config.b, ",",
                    config.master_seed, "\n");
  }
  return out;
}

MetricsDigest DigestMetrics(std::span<const MetricsRecord> records) {
  MetricsDigest d;
  d.rows = records.size();
  if (records.empty()) return d;
  d.final_loss = records.back().loss;
  d.min_sq_grad_norm = records.back().min_sq_grad_norm;
  d.final_accuracy = records.back().accuracy;
  for (const MetricsRecord& r : records) {
    if (r.accuracy.has_value()) {
      d.max_accuracy = std::max(d.max_accuracy.value_or(*r.accuracy), *r.accuracy);
    }
  }
  return d;
}

absl::StatusOr<MetricsDigest> DigestMetricsCsv(const std::string& csv) {
  std::vector<MetricsRecord> records;
  bool header = true;
  for (absl::string_view line : absl::StrSplit(csv, '\n', absl::SkipEmpty())) {
    if (header) {
      if (line != MetricsCsvHeader()) {
        return absl::InvalidArgumentError("unexpected metrics CSV header");
      }
      header = false;
      continue;
    }
    std::vector<absl::string_view> cells = absl::StrSplit(line, ',');
    if (cells.size() != std::size(kMetricsColumns)) {
      return absl::InvalidArgumentError("metrics CSV row has wrong width");
    }
    MetricsRecord r;
    double acc = 0.0;
    if (!absl::SimpleAtoi(cells[1], &r.round) ||
        !absl::SimpleAtod(cells[2], &r.loss) ||
        !absl::SimpleAtod(cells[3], &r.grad_norm) ||
        !absl::SimpleAtod(cells[4], &r.min_sq_grad_norm)) {
      return absl::InvalidArgumentError("metrics CSV row does not parse");
    }
    if (!cells[5].empty()) {
      if (!absl::SimpleAtod(cells[5], &acc)) {
        return absl::InvalidArgumentError("metrics CSV accuracy does not parse");
      }
      r.accuracy = acc;
    }
    records.push_back(r);
  }
  return DigestMetrics(records);
}

std::string FormatSweepSummaryCsv(std::span<const SweepCellResult> results) {
  std::string out =
      "cell_id,b,epsilon,gar,attack,f,seed,status,reason,s,max_accuracy,"
      "final_accuracy,final_min_sq_grad_norm\n";
  for (const SweepCellResult& r : results) {
    const RunConfig& c = r.cell.config;
    std::string reason = r.failure;
    for (char& ch : reason) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    absl::StrAppend(&out, CellId(c), ",", c.b, ",", EpsilonCell(EpsilonOf(c)),
                    ",", GarRuleName(c.gar), ",", AttackKindName(c.attack.kind),
                    ",", c.f, ",", c.master_seed, ",", r.ok ? "ok" : "failed",
                    ",", reason, ",", r.ok ? FormatDouble(r.noise_scale) : "",
                    ",", OptionalCell(r.max_accuracy), ",",
                    OptionalCell(r.final_accuracy), ",",
                    r.ok ? FormatDouble(r.final_min_sq_grad_norm) : "", "\n");
  }
  return out;
}

std::vector<AggregateRow> AggregateSweep(
    std::span<const SweepCellResult> results) {
  // Key order mirrors the grid expansion order, so rows come out in first-seen
  // order.
  using Key = std::tuple<int, int, double, int, int, int>;
  std::map<Key, std::size_t> index;
  std::vector<AggregateRow> rows;
  std::vector<std::vector<double>> accs;
  std::vector<std::vector<double>> norms;
  for (const SweepCellResult& r : results) {
    const RunConfig& c = r.cell.config;
    const std::optional<double> eps = EpsilonOf(c);
    const Key key{c.b, eps.has_value() ? 1 : 0, eps.value_or(0.0),
                  static_cast<int>(c.gar), static_cast<int>(c.attack.kind), c.f};
    auto [it, inserted] = index.emplace(key, rows.size());
    if (inserted) {
      AggregateRow row;
      row.b = c.b;
      row.epsilon = eps;
      row.gar = c.gar;
      row.attack = c.attack.kind;
      row.f = c.f;
      rows.push_back(row);
      accs.emplace_back();
      norms.emplace_back();
    }
    AggregateRow& row = rows[it->second];
    if (!r.ok) {
      ++row.cells_failed;
      continue;
    }
    ++row.cells_ok;
    if (r.max_accuracy.has_value()) accs[it->second].push_back(*r.max_accuracy);
    norms[it->second].push_back(r.final_min_sq_grad_norm);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!accs[i].empty()) {
      double sum = 0.0;
      for (double v : accs[i]) sum += v;
      const double mean = sum / accs[i].size();
      double ss = 0.0;
      for (double v : accs[i]) ss += (v - mean) * (v - mean);
      rows[i].max_accuracy_mean = mean;
      rows[i].max_accuracy_std =
          accs[i].size() > 1 ? std::sqrt(ss / (accs[i].size() - 1)) : 0.0;
    }
    if (!norms[i].empty()) {
      double sum = 0.0;
      for (double v : norms[i]) sum += v;
      rows[i].min_sq_grad_norm_mean = sum / norms[i].size();
    }
  }
  return rows;
}

std::string FormatAggregateCsv(std::span<const AggregateRow> rows) {
  std::string out =
      "b,epsilon,gar,attack,f,cells_ok,cells_failed,max_accuracy_mean,"
      "max_accuracy_std,min_sq_grad_norm_mean\n";
  for (const AggregateRow& r : rows) {
    absl::StrAppend(&out, r.b, ",", EpsilonCell(r.epsilon), ",",
                    GarRuleName(r.gar), ",", AttackKindName(r.attack), ",", r.f,
                    ",", r.cells_ok, ",", r.cells_failed, ",",
                    OptionalCell(r.max_accuracy_mean), ",",
                    OptionalCell(r.max_accuracy_std), ",",
                    r.cells_ok > 0 ? FormatDouble(r.min_sq_grad_norm_mean) : "",
                    "\n");
  }
  return out;
}

absl::Status WriteFileAtomic(const std::string& path,
                             const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::UnavailableError(absl::StrCat("cannot write '", tmp, "'"));
    }
    out << content;
    if (!out) {
      return absl::UnavailableError(absl::StrCat("write failed for '", tmp, "'"));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot rename '", tmp, "' to '", path, "': ", ec.message()));
  }
  return absl::OkStatus();
}

}  // namespace byzdp
