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

#include "byzdp/diagnostics.h"

#include <cmath>
#include <numbers>

#include "absl/strings/str_cat.h"
#include "byzdp/privacy.h"
#include "byzdp/rng.h"

namespace byzdp {

double BatchMeanVariance(double population_variance, int b, std::size_t m) {
  if (m <= 1) return 0.0;
  const double md = static_cast<double>(m);
  const double bd = static_cast<double>(b);
  // The factor is computed first: it rounds to at most 1, so the result never
  // exceeds population_variance.
  const double factor = (md - bd) / ((md - 1.0) * bd);
  return population_variance * factor;
}

absl::StatusOr<VnMargin> ComputeVnMargin(const Model& model,
                                         const Dataset& dataset,
                                         const Vector& theta,
                                         const GarSpec& spec, double s, int b,
                                         VarianceMode mode) {
  absl::StatusOr<KappaValue> kappa = Kappa(spec);
  if (!kappa.ok()) return kappa.status();
  const std::size_t m = dataset.size();
  if (b < 1 || static_cast<std::size_t>(b) > m) {
    return absl::InvalidArgumentError(
        absl::StrCat("1 <= b <= m required (b=", b, ", m=", m, ")"));
  }
  if (!(s >= 0.0)) return absl::InvalidArgumentError("s >= 0 required");
  absl::StatusOr<Vector> grad = FullGrad(model, theta, dataset);
  if (!grad.ok()) return grad.status();

  VnMargin margin;
  margin.theta = theta;
  margin.kappa = kappa->value;
  margin.mode = mode;
  margin.rhs = grad->squaredNorm();
  const int d = model.dimension();

  if (mode.kind == VarianceMode::Kind::kAnalytic) {
    absl::StatusOr<double> pop = PopulationVariance(model, theta, dataset);
    if (!pop.ok()) return pop.status();
    margin.variance = BatchMeanVariance(*pop, b, m) + d * s * s;
  } else {
    if (mode.samples < 2) {
      return absl::InvalidArgumentError("Monte Carlo mode needs >= 2 samples");
    }
    RandomStream stream =
        DeriveStream(mode.seed, 0, 0, StreamPurpose::kMonteCarlo);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int k = 0; k < mode.samples; ++k) {
      const std::vector<std::size_t> batch = *SampleBatch(dataset, b, stream);
      Vector g = Vector::Zero(d);
      for (std::size_t i : batch) {
        g += model.PointGradUnchecked(theta, dataset.point(i));
      }
      g /= static_cast<double>(b);
      g += GaussianNoise(d, s, stream);
      const double dev = (g - *grad).squaredNorm();
      sum += dev;
      sum_sq += dev * dev;
    }
    const double n = mode.samples;
    margin.variance = sum / n;
    const double var_of_dev =
        std::max(0.0, (sum_sq - n * margin.variance * margin.variance) / (n - 1));
    margin.variance_std_error = std::sqrt(var_of_dev / n);
  }
  margin.lhs = margin.kappa * margin.kappa * margin.variance;
  margin.satisfied = margin.lhs < margin.rhs;
  return margin;
}

absl::StatusOr<VnMargin> FindVnViolation(const Model& model,
                                         const Dataset& dataset,
                                         const GarSpec& spec, double s, int b) {
  if (model.kind() != ModelKind::kQuadratic) {
    return absl::FailedPreconditionError(
        "VN violation witness needs the quadratic model (exact minimizer)");
  }
  if (!(s > 0.0)) {
    return absl::FailedPreconditionError(
        "no violation guaranteed: the witness requires noise s > 0");
  }
  absl::StatusOr<KappaValue> kappa = Kappa(spec);
  if (!kappa.ok()) return kappa.status();
  absl::StatusOr<Vector> minimizer = QuadraticMinimizer(model, dataset);
  if (!minimizer.ok()) return minimizer.status();
  absl::StatusOr<double> smoothness = SmoothnessConstant(model, dataset);
  if (!smoothness.ok()) return smoothness.status();
  if (!(*smoothness > 0.0)) {
    return absl::FailedPreconditionError("witness needs L > 0");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.hessian());
  Vector direction = eig.eigenvectors().col(model.dimension() - 1);
  // Fix the sign so the witness is reproducible across Eigen versions.
  Eigen::Index lead = 0;
  direction.cwiseAbs().maxCoeff(&lead);
  if (direction[lead] < 0) direction = -direction;
  direction.normalize();

  const double d = model.dimension();
  const double radius = kappa->value * std::sqrt(d) * s / (2.0 * *smoothness);
  const Vector witness = *minimizer + radius * direction;
  return ComputeVnMargin(model, dataset, witness, spec, s, b,
                         VarianceMode::Analytic());
}

absl::StatusOr<EtaBounds> ComputeEtaBounds(const EtaBoundInputs& in) {
  if (!(in.epsilon > 0.0 && in.epsilon < 1.0)) {
    return absl::InvalidArgumentError("eta bounds require 0 < epsilon < 1");
  }
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    return absl::InvalidArgumentError("eta bounds require 0 < delta < 1");
  }
  if (in.b < 1 || in.m < 1 || in.b > in.m) {
    return absl::InvalidArgumentError("eta bounds require 1 <= b <= m");
  }
  if (!(in.kappa > 0.0) || !(in.clip > 0.0) || in.d < 1 ||
      !(in.upsilon >= 0.0)) {
    return absl::InvalidArgumentError(
        "eta bounds require kappa > 0, C > 0, d >= 1, upsilon >= 0");
  }
  const double log_term =
      std::log(1.25 * in.b / (static_cast<double>(in.m) * in.delta));
  if (!(log_term > 0.0)) {
    return absl::InvalidArgumentError(
        "eta bounds require 1.25 b / (m delta) > 1");
  }
  const double k2 = in.kappa * in.kappa;
  const double c2 = in.clip * in.clip;
  const double em1 = std::expm1(in.epsilon);
  const double b = in.b;
  const double m = in.m;
  EtaBounds out;
  out.inputs = in;
  out.eta_sq_necessary = 4.0 * k2 * c2 * in.d * log_term / (b * m * em1);
  const double factor = 1.0 / (m * em1) + 1.0 / b;
  out.eta_sq_sufficient =
      k2 * (8.0 * c2 * in.d * log_term * factor * factor +
            in.upsilon * in.upsilon);
  return out;
}

absl::StatusOr<double> ConvergenceBound(const ConvergenceBoundInputs& in) {
  if (!(in.alpha >= 0.0 && in.alpha < std::numbers::pi / 2)) {
    return absl::InvalidArgumentError("alpha must lie in [0, pi/2)");
  }
  if (!(in.mu >= 0.0)) return absl::InvalidArgumentError("mu >= 0 required");
  if (!(in.rounds >= 1.0)) return absl::InvalidArgumentError("T >= 1 required");
  if (!(in.smoothness > 0.0)) {
    return absl::InvalidArgumentError("L > 0 required");
  }
  if (!(in.initial_loss >= in.optimal_loss)) {
    return absl::InvalidArgumentError("Q(theta_1) >= Q* required");
  }
  if (!(in.eta_sq >= 0.0) || !(in.sigma >= 0.0)) {
    return absl::InvalidArgumentError("eta^2 and sigma must be >= 0");
  }
  const double one_minus_sin = 1.0 - std::sin(in.alpha);
  const double root_t = std::sqrt(in.rounds);
  const double decaying =
      (in.initial_loss - in.optimal_loss) / one_minus_sin / root_t +
      in.mu * in.sigma * in.sigma * in.smoothness / (2.0 * one_minus_sin) *
          (1.0 + std::log(in.rounds)) / root_t;
  return std::max(in.eta_sq, decaying);
}

double SigmaTotal(double upsilon, int d, double s, double clip) {
  return std::sqrt(upsilon * upsilon + d * s * s + clip * clip);
}

absl::StatusOr<OptimalLoss> EstimateOptimalLoss(const Model& model,
                                                const Dataset& dataset,
                                                int steps) {
  if (model.kind() == ModelKind::kQuadratic) {
    absl::StatusOr<Vector> minimizer = QuadraticMinimizer(model, dataset);
    if (!minimizer.ok()) return minimizer.status();
    absl::StatusOr<double> loss = EmpiricalLoss(model, *minimizer, dataset);
    if (!loss.ok()) return loss.status();
    return OptimalLoss{*loss, true};
  }
  double step = 0.5;
  Vector theta = Vector::Zero(model.dimension());
  if (model.kind() == ModelKind::kLogistic) {
    absl::StatusOr<double> smoothness = SmoothnessConstant(model, dataset);
    if (!smoothness.ok()) return smoothness.status();
    step = 1.0 / *smoothness;
  } else {
    // tanh units are all dead at zero; start from a small fixed point.
    RandomStream stream = DeriveStream(0, 0, 0, StreamPurpose::kInit);
    std::uniform_real_distribution<double> uniform(-0.1, 0.1);
    for (Eigen::Index j = 0; j < theta.size(); ++j) theta[j] = uniform(stream);
  }
  absl::StatusOr<double> best = EmpiricalLoss(model, theta, dataset);
  if (!best.ok()) return best.status();
  double lowest = *best;
  for (int k = 0; k < steps; ++k) {
    theta -= step * *FullGrad(model, theta, dataset);
    lowest = std::min(lowest, *EmpiricalLoss(model, theta, dataset));
  }
  return OptimalLoss{lowest, false};
}

}  // namespace byzdp
