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

#ifndef BYZDP_DIAGNOSTICS_H_
#define BYZDP_DIAGNOSTICS_H_

#include <cstdint>

#include "absl/status/statusor.h"
#include "byzdp/aggregation.h"
#include "byzdp/model.h"

namespace byzdp {

// How Var[G(theta)] is obtained for the variance-to-norm check.
struct VarianceMode {
  enum class Kind { kAnalytic, kMonteCarlo };
  Kind kind = Kind::kAnalytic;
  int samples = 0;          // Monte Carlo only
  std::uint64_t seed = 0;   // Monte Carlo only

  static VarianceMode Analytic() { return {}; }
  static VarianceMode MonteCarlo(int samples, std::uint64_t seed) {
    return {Kind::kMonteCarlo, samples, seed};
  }
};

// Both sides of kappa^2 E||G - E G||^2 < ||E G||^2 at one theta, where G is
// an honest worker's noisy mini-batch gradient (unclipped point gradients).
struct VnMargin {
  Vector theta;
  double kappa = 0.0;
  double variance = 0.0;  // E||G(theta) - grad Q(theta)||^2
  double lhs = 0.0;       // kappa^2 * variance
  double rhs = 0.0;       // ||grad Q(theta)||^2
  bool satisfied = false; // lhs < rhs
  VarianceMode mode;
  // Monte Carlo standard error of `variance`; zero for analytic mode.
  double variance_std_error = 0.0;
};

// Variance of the without-replacement batch mean:
// (1/b) * (m - b)/(m - 1) * population_variance.
double BatchMeanVariance(double population_variance, int b, std::size_t m);

// Analytic: BatchMeanVariance + d s^2. Monte Carlo: mean of `samples`
// realizations of ||G(theta) - grad Q(theta)||^2.
absl::StatusOr<VnMargin> ComputeVnMargin(const Model& model,
                                         const Dataset& dataset,
                                         const Vector& theta,
                                         const GarSpec& spec, double s, int b,
                                         VarianceMode mode);

// Constructive witness that the VN condition fails somewhere for s > 0:
// theta' = theta* + r u with theta* the quadratic minimizer, u the top
// eigenvector of the Hessian (so grad Q(theta') = L r u != 0) and
// r = kappa sqrt(d) s / (2L). Then ||grad Q(theta')||^2 = kappa^2 d s^2 / 4,
// strictly below the noise part kappa^2 d s^2 of the left-hand side.
absl::StatusOr<VnMargin> FindVnViolation(const Model& model,
                                         const Dataset& dataset,
                                         const GarSpec& spec, double s, int b);

struct EtaBoundInputs {
  double kappa = 0.0;
  double clip = 0.0;  // C
  int d = 1;
  int b = 1;
  int m = 1;
  double epsilon = 0.0;
  double delta = 0.0;
  double upsilon = 0.0;
};

struct EtaBounds {
  EtaBoundInputs inputs;
  // 4 kappa^2 C^2 d ln(1.25 b/(m delta)) / (b m (e^eps - 1))
  double eta_sq_necessary = 0.0;
  // kappa^2 (8 C^2 d ln(1.25 b/(m delta)) (1/(m(e^eps-1)) + 1/b)^2 + ups^2)
  double eta_sq_sufficient = 0.0;
};

absl::StatusOr<EtaBounds> ComputeEtaBounds(const EtaBoundInputs& in);

struct ConvergenceBoundInputs {
  double rounds = 1;  // T
  double eta_sq = 0.0;
  double alpha = 0.0;  // [0, pi/2)
  double mu = 0.0;
  double sigma = 0.0;
  double smoothness = 1.0;  // L
  double initial_loss = 0.0;  // Q(theta_1)
  double optimal_loss = 0.0;  // Q*
};

// max(eta^2, (Q1 - Q*)/(1 - sin a) / sqrt(T)
//            + mu sigma^2 L / (2 (1 - sin a)) (1 + ln T) / sqrt(T)).
absl::StatusOr<double> ConvergenceBound(const ConvergenceBoundInputs& in);

// sqrt(upsilon^2 + d s^2 + C^2).
double SigmaTotal(double upsilon, int d, double s, double clip);

struct OptimalLoss {
  double value = 0.0;
  // False when `value` is only an upper bound on Q* (iterative estimate).
  bool exact = true;
};

// Quadratic: exact Q(theta*). Logistic/mlp1: loss after `steps` of
// full-batch gradient descent from zero, an upper bound on Q*.
absl::StatusOr<OptimalLoss> EstimateOptimalLoss(const Model& model,
                                                const Dataset& dataset,
                                                int steps = 5000);

}  // namespace byzdp

#endif  // BYZDP_DIAGNOSTICS_H_
