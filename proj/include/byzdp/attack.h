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

#ifndef BYZDP_ATTACK_H_
#define BYZDP_ATTACK_H_

#include <optional>
#include <span>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "byzdp/model.h"

namespace byzdp {

enum class AttackKind { kNone, kLittle, kEmpire };

absl::string_view AttackKindName(AttackKind kind);
absl::StatusOr<AttackKind> ParseAttackKind(absl::string_view name);

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  double zeta = 0.0;

  // little -> zeta 1, empire -> zeta 1.1, none -> 0.
  static AttackSpec WithDefaults(AttackKind kind,
                                 std::optional<double> zeta = std::nullopt);
};

// Vector sent by every Byzantine worker in a round, given the honest
// submissions of that round (omniscient attacker). With g the coordinate-wise
// mean and sigma the coordinate-wise population standard deviation:
//   none   -> g
//   little -> g - zeta * sigma
//   empire -> (1 - zeta) * g
absl::StatusOr<Vector> Forge(const AttackSpec& spec,
                             std::span<const Vector> honest);

}  // namespace byzdp

#endif  // BYZDP_ATTACK_H_
