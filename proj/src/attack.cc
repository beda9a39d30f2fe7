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

#include "byzdp/attack.h"

#include <cmath>
#include <vector>

#include "absl/strings/str_cat.h"
#include "byzdp/aggregation.h"

namespace byzdp {

absl::string_view AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone:
      return "none";
    case AttackKind::kLittle:
      return "little";
    case AttackKind::kEmpire:
      return "empire";
  }
  return "unknown";
}

absl::StatusOr<AttackKind> ParseAttackKind(absl::string_view name) {
  if (name == "none") return AttackKind::kNone;
  if (name == "little") return AttackKind::kLittle;
  if (name == "empire") return AttackKind::kEmpire;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown attack '", name, "' (expected none, little or empire)"));
}

AttackSpec AttackSpec::WithDefaults(AttackKind kind,
                                    std::optional<double> zeta) {
  AttackSpec spec;
  spec.kind = kind;
  if (zeta.has_value()) {
    spec.zeta = *zeta;
  } else if (kind == AttackKind::kLittle) {
    spec.zeta = 1.0;
  } else if (kind == AttackKind::kEmpire) {
    spec.zeta = 1.1;
  }
  return spec;
}

absl::StatusOr<Vector> Forge(const AttackSpec& spec,
                             std::span<const Vector> honest) {
  if (honest.empty()) {
    return absl::InvalidArgumentError(
        "attack needs at least one honest gradient");
  }
  if (!(spec.zeta >= 0.0)) {
    return absl::InvalidArgumentError("attack zeta must be >= 0");
  }
  const Eigen::Index d = honest.front().size();
  for (const Vector& g : honest) {
    if (g.size() != d) {
      return absl::InvalidArgumentError(
          "dimension mismatch among honest gradients");
    }
  }
  std::vector<const Vector*> refs;
  refs.reserve(honest.size());
  for (const Vector& g : honest) refs.push_back(&g);
  const Vector mean = gar_internal::CanonicalMean(refs);

  switch (spec.kind) {
    case AttackKind::kNone:
      return mean;
    case AttackKind::kEmpire:
      return Vector((1.0 - spec.zeta) * mean);
    case AttackKind::kLittle: {
      // Population variance per coordinate, summed in sorted order so the
      // result does not depend on worker order.
      Vector sigma(d);
      std::vector<double> sq(honest.size());
      for (Eigen::Index j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < honest.size(); ++i) {
          const double dev = honest[i][j] - mean[j];
          sq[i] = dev * dev;
        }
        std::sort(sq.begin(), sq.end());
        double total = 0.0;
        for (double v : sq) total += v;
        sigma[j] = std::sqrt(total / static_cast<double>(honest.size()));
      }
      return Vector(mean - spec.zeta * sigma);
    }
  }
  return absl::InternalError("unreachable");
}

}  // namespace byzdp
