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

#include "byzdp/engine.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "byzdp/rng.h"

namespace byzdp {
namespace {

// Full-dataset loss/gradient/accuracy for the metrics rows. The quadratic
// kind uses the closed form around the data mean.
class MetricsEvaluator {
 public:
  explicit MetricsEvaluator(const Problem& problem) : problem_(problem) {
    const Model& model = problem.model;
    if (model.kind() != ModelKind::kQuadratic) return;
    const Dataset& data = problem.data;
    mean_ = Vector::Zero(model.dimension());
    for (const DataPoint& x : data.points()) mean_ += x.features;
    mean_ /= static_cast<double>(data.size());
    double c = 0.0;
    for (const DataPoint& x : data.points()) {
      const Vector diff = x.features - mean_;
      c += 0.5 * diff.dot(model.hessian() * diff);
    }
    spread_term_ = c / static_cast<double>(data.size());
  }

  void Evaluate(const Vector& theta, MetricsRecord& record) const {
    const Model& model = problem_.model;
    if (model.kind() == ModelKind::kQuadratic) {
      const Vector diff = theta - mean_;
      const Vector hd = model.hessian() * diff;
      const Vector grad = hd + model.lambda() * theta;
      record.grad_norm = grad.norm();
      record.loss = 0.5 * diff.dot(hd) + spread_term_ +
                    0.5 * model.lambda() * theta.squaredNorm();
      return;
    }
    record.grad_norm = FullGrad(model, theta, problem_.data)->norm();
    record.loss = *EmpiricalLoss(model, theta, problem_.data);
    record.accuracy = *Accuracy(model, theta, problem_.data);
  }

 private:
  const Problem& problem_;
  Vector mean_;
  double spread_term_ = 0.0;
};

template <typename Fn>
void ParallelFor(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

absl::string_view DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kTargets:
      return "targets";
    case DatasetKind::kBlobs:
      return "blobs";
    case DatasetKind::kCsv:
      return "csv";
  }
  return "unknown";
}

absl::StatusOr<DatasetKind> ParseDatasetKind(absl::string_view name) {
  if (name == "targets") return DatasetKind::kTargets;
  if (name == "blobs") return DatasetKind::kBlobs;
  if (name == "csv") return DatasetKind::kCsv;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown dataset kind '", name, "' (expected targets, blobs or csv)"));
}

absl::StatusOr<Problem> BuildProblem(const ModelSpec& model_spec,
                                     const DatasetSpec& data_spec) {
  absl::StatusOr<Dataset> data = absl::InternalError("unset");
  switch (data_spec.kind) {
    case DatasetKind::kTargets:
      data = MakeTargetCloud({data_spec.m, data_spec.features,
                              data_spec.center, data_spec.spread,
                              data_spec.seed});
      break;
    case DatasetKind::kBlobs:
      data = MakeGaussianBlobs({data_spec.m, data_spec.features,
                                data_spec.separation, data_spec.spread,
                                data_spec.label_noise, data_spec.seed});
      break;
    case DatasetKind::kCsv:
      data = LoadCsvDataset(data_spec.path, data_spec.csv_has_label);
      break;
  }
  if (!data.ok()) return data.status();

  const int p = data->feature_dim();
  absl::StatusOr<Model> model = absl::InternalError("unset");
  switch (model_spec.kind) {
    case ModelKind::kQuadratic: {
      Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);
      if (!model_spec.hessian_diagonal.empty()) {
        if (static_cast<int>(model_spec.hessian_diagonal.size()) != p) {
          return absl::InvalidArgumentError(absl::StrCat(
              "hessian_diagonal has ", model_spec.hessian_diagonal.size(),
              " entries but data points have ", p, " features"));
        }
        for (int j = 0; j < p; ++j) h(j, j) = model_spec.hessian_diagonal[j];
      }
      model = Model::Quadratic(std::move(h), model_spec.lambda);
      break;
    }
    case ModelKind::kLogistic:
      model = Model::Logistic(p, model_spec.lambda);
      break;
    case ModelKind::kMlp1:
      model = Model::Mlp1(p, model_spec.hidden, model_spec.lambda);
      break;
  }
  if (!model.ok()) return model.status();
  if (model->is_classifier()) {
    for (const DataPoint& x : data->points()) {
      if (x.label != 0.0 && x.label != 1.0) {
        return absl::InvalidArgumentError(
            "classification models need labels in {0, 1}");
      }
    }
  }
  return Problem{*std::move(model), *std::move(data)};
}

double Schedule::At(int t) const {
  if (kind == ScheduleKind::kConstant) return gamma;
  return 1.0 / std::sqrt(static_cast<double>(t));
}

std::string Schedule::ToString() const {
  if (kind == ScheduleKind::kConstant) return absl::StrCat("constant(", gamma, ")");
  return "inv_sqrt";
}

absl::StatusOr<Schedule> ParseSchedule(absl::string_view name, double gamma) {
  if (name == "inv_sqrt") return Schedule{ScheduleKind::kInvSqrt, gamma};
  if (name == "constant") {
    if (!(gamma > 0.0)) {
      return absl::InvalidArgumentError("constant schedule needs gamma > 0");
    }
    return Schedule{ScheduleKind::kConstant, gamma};
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown schedule '", name, "' (expected inv_sqrt or constant)"));
}

absl::Status ValidateRunConfig(const RunConfig& config) {
  if (config.n < 1) return absl::InvalidArgumentError("n >= 1 required");
  if (config.f < 0 || config.f >= config.n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "f < n required (n=", config.n, ", f=", config.f, ")"));
  }
  if (absl::Status s = ValidateGarSpec(config.gar_spec()); !s.ok()) return s;
  if (!(config.attack.zeta >= 0.0)) {
    return absl::InvalidArgumentError("zeta >= 0 required");
  }
  if (!(config.clip > 0.0)) {
    return absl::InvalidArgumentError("clip C > 0 required");
  }
  if (config.b < 1) return absl::InvalidArgumentError("b >= 1 required");
  if (config.rounds < 1) return absl::InvalidArgumentError("T >= 1 required");
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    return absl::InvalidArgumentError("momentum must lie in [0, 1)");
  }
  if (config.eval_every < 1) {
    return absl::InvalidArgumentError("eval_every >= 1 required");
  }
  if (config.worker_threads < 1) {
    return absl::InvalidArgumentError("worker_threads >= 1 required");
  }
  if (config.schedule.kind == ScheduleKind::kConstant &&
      !(config.schedule.gamma > 0.0)) {
    return absl::InvalidArgumentError("constant schedule needs gamma > 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> ResolveNoiseScale(const RunConfig& config,
                                         std::size_t m) {
  if (static_cast<std::size_t>(config.b) > m) {
    return absl::InvalidArgumentError(absl::StrCat(
        "b <= m required (b=", config.b, ", m=", m, ")"));
  }
  if (!config.privacy.has_value()) return 0.0;
  return NoiseScale(config.clip, config.b, static_cast<int>(m),
                    config.privacy->epsilon, config.privacy->delta);
}

absl::StatusOr<Vector> ServerAggregate(
    const GarSpec& spec, std::span<const GradientMessage> messages) {
  std::vector<Vector> vectors;
  vectors.reserve(messages.size());
  for (const GradientMessage& msg : messages) vectors.push_back(msg.vector);
  return Aggregate(spec, vectors);
}

Vector HonestGradient(const Problem& problem, const Vector& theta, int b,
                      const ClipParams& clip, double s,
                      std::uint64_t master_seed, int worker, int round) {
  RandomStream batch_stream =
      DeriveStream(master_seed, worker, round, StreamPurpose::kBatch);
  const std::vector<std::size_t> batch =
      *SampleBatch(problem.data, b, batch_stream);
  Vector sum = Vector::Zero(problem.model.dimension());
  for (std::size_t i : batch) {
    sum += Clip(problem.model.PointGradUnchecked(theta, problem.data.point(i)),
                clip);
  }
  Vector g = sum / static_cast<double>(b);
  if (s > 0.0) {
    RandomStream noise_stream =
        DeriveStream(master_seed, worker, round, StreamPurpose::kNoise);
    g += GaussianNoise(problem.model.dimension(), s, noise_stream);
  }
  return g;
}

Vector InitialParameters(int d, std::uint64_t master_seed) {
  RandomStream stream = DeriveStream(master_seed, 0, 0, StreamPurpose::kInit);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  Vector theta(d);
  for (int j = 0; j < d; ++j) theta[j] = uniform(stream);
  return theta;
}

absl::StatusOr<RunResult> Run(const RunConfig& config) {
  if (absl::Status s = ValidateRunConfig(config); !s.ok()) return s;
  absl::StatusOr<Problem> problem = BuildProblem(config.model, config.data);
  if (!problem.ok()) return problem.status();
  return Run(config, *problem);
}

absl::StatusOr<RunResult> Run(const RunConfig& config, const Problem& problem) {
  if (absl::Status s = ValidateRunConfig(config); !s.ok()) return s;
  const std::size_t m = problem.data.size();
  absl::StatusOr<double> noise = ResolveNoiseScale(config, m);
  if (!noise.ok()) return noise.status();

  RunResult result;
  result.noise_scale = *noise;
  if (config.privacy.has_value()) {
    result.privacy = *CalibratePrivacy(config.clip, config.b,
                                       static_cast<int>(m),
                                       config.privacy->epsilon,
                                       config.privacy->delta);
  }

  const int d = problem.model.dimension();
  const int honest = config.n - config.f;
  const GarSpec gar = config.gar_spec();
  const ClipParams clip{config.clip};
  const MetricsEvaluator evaluator(problem);

  Vector theta = InitialParameters(d, config.master_seed);
  std::vector<Vector> momentum(honest, Vector::Zero(d));
  std::vector<GradientMessage> messages(config.n);
  for (int i = 0; i < config.n; ++i) {
    messages[i].worker_id = i;
    messages[i].is_byzantine = i >= honest;
  }
  std::vector<Vector> honest_vectors(honest);
  double running_min = std::numeric_limits<double>::infinity();

  for (int t = 1; t <= config.rounds; ++t) {
    const double gamma = config.schedule.At(t);
    if (t % config.eval_every == 0) {
      MetricsRecord record;
      record.round = t;
      record.s = result.noise_scale;
      record.gamma = gamma;
      evaluator.Evaluate(theta, record);
      running_min = std::min(running_min, record.grad_norm * record.grad_norm);
      record.min_sq_grad_norm = running_min;
      result.metrics.push_back(std::move(record));
    }

    ParallelFor(honest, config.worker_threads, [&](int i) {
      Vector g = HonestGradient(problem, theta, config.b, clip,
                                result.noise_scale, config.master_seed, i, t);
      if (config.momentum > 0.0) {
        momentum[i] = config.momentum * momentum[i] + g;
        honest_vectors[i] = momentum[i];
      } else {
        honest_vectors[i] = std::move(g);
      }
    });

    for (int i = 0; i < honest; ++i) {
      messages[i].round = t;
      messages[i].vector = honest_vectors[i];
    }
    if (config.f > 0) {
      absl::StatusOr<Vector> forged = Forge(config.attack, honest_vectors);
      if (!forged.ok()) return forged.status();
      for (int i = honest; i < config.n; ++i) {
        messages[i].round = t;
        messages[i].vector = *forged;
      }
    }
    absl::StatusOr<Vector> aggregate = ServerAggregate(gar, messages);
    if (!aggregate.ok()) return aggregate.status();
    theta -= gamma * *aggregate;
    if (!theta.allFinite()) {
      return absl::OutOfRangeError(
          absl::StrCat("parameters diverged to a non-finite value at round ", t));
    }
  }
  result.final_theta = std::move(theta);
  return result;
}

std::vector<SweepCell> ExpandGrid(const RunConfig& base,
                                  const SweepGrid& grid) {
  auto or_base = []<typename T>(const std::vector<T>& axis, T fallback) {
    return axis.empty() ? std::vector<T>{fallback} : axis;
  };
  const auto bs = or_base(grid.b, base.b);
  const auto eps = or_base(
      grid.epsilon, base.privacy.has_value()
                        ? std::optional<double>(base.privacy->epsilon)
                        : std::optional<double>());
  const auto gars = or_base(grid.gar, base.gar);
  const auto attacks = or_base(grid.attack, base.attack.kind);
  const auto fs = or_base(grid.f, base.f);
  const auto seeds = or_base(grid.seed, base.master_seed);
  const double delta = grid.epsilon.empty() && base.privacy.has_value()
                           ? base.privacy->delta
                           : grid.delta;

  std::vector<SweepCell> cells;
  for (int b : bs) {
    for (const std::optional<double>& e : eps) {
      for (GarRule gar : gars) {
        for (AttackKind attack : attacks) {
          for (int f : fs) {
            for (std::uint64_t seed : seeds) {
              SweepCell cell;
              cell.index = cells.size();
              cell.config = base;
              cell.config.b = b;
              if (e.has_value()) {
                cell.config.privacy = EpsilonDelta{*e, delta};
              } else {
                cell.config.privacy.reset();
              }
              cell.config.gar = gar;
              if (attack != base.attack.kind) {
                cell.config.attack = AttackSpec::WithDefaults(attack);
              }
              cell.config.f = f;
              cell.config.master_seed = seed;
              cells.push_back(std::move(cell));
            }
          }
        }
      }
    }
  }
  return cells;
}

std::vector<SweepCellResult> Sweep(const RunConfig& base, const SweepGrid& grid,
                                   int jobs) {
  const std::vector<SweepCell> cells = ExpandGrid(base, grid);
  std::vector<SweepCellResult> results(cells.size());
  // All cells share the model and data spec.
  const absl::StatusOr<Problem> problem = BuildProblem(base.model, base.data);
  ParallelFor(static_cast<int>(cells.size()), jobs, [&](int i) {
    SweepCellResult& out = results[i];
    out.cell = cells[i];
    if (!problem.ok()) {
      out.failure = std::string(problem.status().message());
      return;
    }
    absl::StatusOr<RunResult> run = Run(cells[i].config, *problem);
    if (!run.ok()) {
      out.failure = std::string(run.status().message());
      return;
    }
    out.ok = true;
    out.noise_scale = run->noise_scale;
    out.metrics = std::move(run->metrics);
    for (const MetricsRecord& r : out.metrics) {
      if (r.accuracy.has_value()) {
        out.max_accuracy = std::max(out.max_accuracy.value_or(*r.accuracy),
                                    *r.accuracy);
      }
    }
    if (!out.metrics.empty()) {
      out.final_accuracy = out.metrics.back().accuracy;
      out.final_min_sq_grad_norm = out.metrics.back().min_sq_grad_norm;
    }
  });
  return results;
}

}  // namespace byzdp
