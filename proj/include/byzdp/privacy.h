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

#ifndef BYZDP_PRIVACY_H_
#define BYZDP_PRIVACY_H_

#include <string>

#include "absl/status/statusor.h"
#include "byzdp/model.h"
#include "byzdp/rng.h"

namespace byzdp {

struct EpsilonDelta {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Per-step, per-worker budget plus the calibrated Gaussian noise scale.
struct PrivacyParams {
  double epsilon = 0.0;
  double delta = 0.0;
  double clip = 0.0;  // C
  int b = 1;
  int m = 1;
  // Derived by CalibratePrivacy.
  double noise_scale = 0.0;  // s
  // ln((e^eps - 1) m / b + 1): the budget the Gaussian mechanism must meet on
  // the batch so that sub-sampling brings it down to eps.
  double epsilon_inner = 0.0;
  // Set when epsilon_inner >= 1, i.e. outside the (0, 1) range for which the
  // classic Gaussian-mechanism bound is stated.
  bool inner_epsilon_warning = false;
};

// L2 sensitivity 2C/b of the mean of b clipped per-point gradients under
// replacement of one point.
double SensitivityMeanGrad(double clip, int b);

// Sub-sampling amplification: a mechanism that is eps-DP on its batch is
// ln(1 + (b/m)(e^eps - 1))-DP with respect to the full dataset.
double AmplifiedEpsilon(double epsilon, int b, int m);

// s = 2C / (b ln((e^eps - 1) m/b + 1)) * sqrt(2 ln(1.25 b / (m delta))).
//
// Fails with InvalidArgument naming the violated bound when eps or delta lie
// outside (0, 1), when b is not in [1, m], when C <= 0, or when
// 1.25 b / (m delta) <= 1 (the logarithm under the root would be <= 0).
absl::StatusOr<PrivacyParams> CalibratePrivacy(double clip, int b, int m,
                                               double epsilon, double delta);

// Convenience: just the scale s.
absl::StatusOr<double> NoiseScale(double clip, int b, int m, double epsilon,
                                  double delta);

// d i.i.d. N(0, s^2) draws. s = 0 yields the zero vector without touching the
// stream.
Vector GaussianNoise(int d, double s, RandomStream& stream);

struct CompositionReport {
  int steps = 1;
  EpsilonDelta per_step;
  double delta_slack = 0.0;
  // (T eps, T delta).
  EpsilonDelta basic;
  // (eps sqrt(2 T ln(1/delta'')) + T eps (e^eps - 1), T delta + delta'').
  EpsilonDelta advanced;

  // Label of the smaller of the two epsilon bounds ("basic" or "advanced").
  std::string tighter() const;
};

absl::StatusOr<CompositionReport> Compose(EpsilonDelta per_step, int steps,
                                          double delta_slack);

}  // namespace byzdp

#endif  // BYZDP_PRIVACY_H_
