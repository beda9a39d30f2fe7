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

#ifndef BYZDP_ENGINE_H_
#define BYZDP_ENGINE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "byzdp/aggregation.h"
#include "byzdp/attack.h"
#include "byzdp/model.h"
#include "byzdp/privacy.h"

namespace byzdp {

enum class DatasetKind { kTargets, kBlobs, kCsv };

absl::string_view DatasetKindName(DatasetKind kind);
absl::StatusOr<DatasetKind> ParseDatasetKind(absl::string_view name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kTargets;
  std::size_t m = 1000;
  // Feature width of generated points.
  int features = 10;
  std::uint64_t seed = 0;
  // Target cloud.
  double center = 0.0;
  double spread = 1.0;
  // Blobs.
  double separation = 2.0;
  double label_noise = 0.0;
  // CSV.
  std::string path;
  bool csv_has_label = true;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kQuadratic;
  double lambda = 0.0;
  // Quadratic Hessian diagonal; empty means identity.
  std::vector<double> hessian_diagonal;
  // mlp1 hidden width.
  int hidden = 16;
};

// A model together with the data it is trained on.
struct Problem {
  Model model;
  Dataset data;
};

absl::StatusOr<Problem> BuildProblem(const ModelSpec& model_spec,
                                     const DatasetSpec& data_spec);

enum class ScheduleKind { kInvSqrt, kConstant };

struct Schedule {
  ScheduleKind kind = ScheduleKind::kInvSqrt;
  double gamma = 0.5;  // constant schedule only

  // gamma_t for rounds t = 1, 2, ...
  double At(int t) const;
  std::string ToString() const;
};

absl::StatusOr<Schedule> ParseSchedule(absl::string_view name, double gamma);

struct RunConfig {
  ModelSpec model;
  DatasetSpec data;
  int n = 1;
  int f = 0;
  GarRule gar = GarRule::kAverage;
  std::uint64_t mda_subset_cap = kDefaultMdaSubsetCap;
  AttackSpec attack;
  // Per-step, per-worker budget; nullopt disables noise (s = 0).
  std::optional<EpsilonDelta> privacy;
  double clip = 2.0;  // C
  int b = 1;
  int rounds = 1;  // T
  Schedule schedule;
  double momentum = 0.0;  // beta in [0, 1)
  std::uint64_t master_seed = 1;
  int eval_every = 1;
  // Honest workers of a round may be computed on this many threads; results
  // do not depend on it.
  int worker_threads = 1;

  GarSpec gar_spec() const { return GarSpec{gar, n, f, mda_subset_cap}; }
};

// Checks everything that does not need the dataset.
absl::Status ValidateRunConfig(const RunConfig& config);

// Noise scale s for the configuration (0 when privacy is disabled).
absl::StatusOr<double> ResolveNoiseScale(const RunConfig& config,
                                         std::size_t m);

// One worker's submission. The Byzantine flag is for auditing only.
struct GradientMessage {
  int worker_id = 0;
  int round = 0;
  Vector vector;
  bool is_byzantine = false;
};

// Server side of a round: aggregates only the message vectors, in worker
// order.
absl::StatusOr<Vector> ServerAggregate(const GarSpec& spec,
                                       std::span<const GradientMessage> messages);

// Honest worker computation for one round: mean of clipped per-point
// gradients over a fresh batch plus N(0, s^2 I) noise. Batch and noise use
// separate streams keyed by (seed, worker, round).
Vector HonestGradient(const Problem& problem, const Vector& theta, int b,
                      const ClipParams& clip, double s,
                      std::uint64_t master_seed, int worker, int round);

// Deterministic theta_1, coordinates uniform in [-0.5, 0.5].
Vector InitialParameters(int d, std::uint64_t master_seed);

struct MetricsRecord {
  int round = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double min_sq_grad_norm = 0.0;
  std::optional<double> accuracy;
  double s = 0.0;
  double gamma = 0.0;
};

struct RunResult {
  std::vector<MetricsRecord> metrics;
  Vector final_theta;
  double noise_scale = 0.0;
  // Calibration details when privacy is enabled.
  std::optional<PrivacyParams> privacy;
};

// Runs T synchronous rounds. Configuration errors surface before round 1.
absl::StatusOr<RunResult> Run(const RunConfig& config);
absl::StatusOr<RunResult> Run(const RunConfig& config, const Problem& problem);

struct SweepGrid {
  std::vector<int> b;
  // nullopt entries mean "no privacy".
  std::vector<std::optional<double>> epsilon;
  std::vector<GarRule> gar;
  std::vector<AttackKind> attack;
  std::vector<int> f;
  std::vector<std::uint64_t> seed;
  // delta paired with every epsilon of the grid.
  double delta = 1e-5;
};

struct SweepCell {
  std::size_t index = 0;
  RunConfig config;
};

struct SweepCellResult {
  SweepCell cell;
  bool ok = false;
  std::string failure;
  // Max over recorded rounds; nullopt for non-classifiers.
  std::optional<double> max_accuracy;
  std::optional<double> final_accuracy;
  double final_min_sq_grad_norm = 0.0;
  double noise_scale = 0.0;
  std::vector<MetricsRecord> metrics;
};

// Cartesian product of the grid over the base config. Empty grid axes keep
// the base value. Cell order: b, epsilon, gar, attack, f, seed (seed fastest).
std::vector<SweepCell> ExpandGrid(const RunConfig& base, const SweepGrid& grid);

// Runs every cell on up to `jobs` threads. Invalid cells are reported as
// failed and do not stop the sweep. Results are in cell order.
std::vector<SweepCellResult> Sweep(const RunConfig& base, const SweepGrid& grid,
                                   int jobs = 1);

}  // namespace byzdp

#endif  // BYZDP_ENGINE_H_
