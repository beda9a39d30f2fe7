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

#include "byzdp/privacy.h"

#include <cmath>

#include "absl/strings/str_cat.h"

namespace byzdp {

double SensitivityMeanGrad(double clip, int b) {
  return 2.0 * clip / static_cast<double>(b);
}

double AmplifiedEpsilon(double epsilon, int b, int m) {
  if (b == m) return epsilon;
  const double ratio = static_cast<double>(b) / static_cast<double>(m);
  return std::log1p(ratio * std::expm1(epsilon));
}

absl::StatusOr<PrivacyParams> CalibratePrivacy(double clip, int b, int m,
                                               double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("privacy calibration requires 0 < epsilon < 1, got ",
                     epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "privacy calibration requires 0 < delta < 1, got ", delta));
  }
  if (!(clip > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("privacy calibration requires C > 0, got ", clip));
  }
  if (b < 1 || m < 1 || b > m) {
    return absl::InvalidArgumentError(absl::StrCat(
        "privacy calibration requires 1 <= b <= m, got b=", b, ", m=", m));
  }
  const double log_arg = 1.25 * b / (static_cast<double>(m) * delta);
  if (!(log_arg > 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "privacy calibration requires 1.25 b / (m delta) > 1, got ", log_arg));
  }
  PrivacyParams p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.clip = clip;
  p.b = b;
  p.m = m;
  const double ratio = static_cast<double>(m) / static_cast<double>(b);
  p.epsilon_inner = std::log1p(std::expm1(epsilon) * ratio);
  p.inner_epsilon_warning = p.epsilon_inner >= 1.0;
  p.noise_scale = SensitivityMeanGrad(clip, b) / p.epsilon_inner *
                  std::sqrt(2.0 * std::log(log_arg));
  return p;
}

absl::StatusOr<double> NoiseScale(double clip, int b, int m, double epsilon,
                                  double delta) {
  absl::StatusOr<PrivacyParams> p = CalibratePrivacy(clip, b, m, epsilon, delta);
  if (!p.ok()) return p.status();
  return p->noise_scale;
}

Vector GaussianNoise(int d, double s, RandomStream& stream) {
  Vector y = Vector::Zero(d);
  if (s == 0.0) return y;
  std::normal_distribution<double> normal(0.0, s);
  for (int j = 0; j < d; ++j) y[j] = normal(stream);
  return y;
}

std::string CompositionReport::tighter() const {
  return advanced.epsilon < basic.epsilon ? "advanced" : "basic";
}

absl::StatusOr<CompositionReport> Compose(EpsilonDelta per_step, int steps,
                                          double delta_slack) {
  if (steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("composition requires T >= 1, got ", steps));
  }
  if (!(delta_slack > 0.0 && delta_slack < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "composition slack delta'' must lie in (0, 1), got ", delta_slack));
  }
  const double t = static_cast<double>(steps);
  CompositionReport r;
  r.steps = steps;
  r.per_step = per_step;
  r.delta_slack = delta_slack;
  r.basic = {t * per_step.epsilon, t * per_step.delta};
  r.advanced.epsilon =
      per_step.epsilon * std::sqrt(2.0 * t * std::log(1.0 / delta_slack)) +
      t * per_step.epsilon * std::expm1(per_step.epsilon);
  r.advanced.delta = t * per_step.delta + delta_slack;
  return r;
}

}  // namespace byzdp
