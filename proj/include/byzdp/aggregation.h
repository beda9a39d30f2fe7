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

#ifndef BYZDP_AGGREGATION_H_
#define BYZDP_AGGREGATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "byzdp/model.h"

namespace byzdp {

enum class GarRule { kAverage, kKrum, kMda, kMedian, kBulyan };

absl::string_view GarRuleName(GarRule rule);
absl::StatusOr<GarRule> ParseGarRule(absl::string_view name);

inline constexpr std::uint64_t kDefaultMdaSubsetCap = 200000;

// A gradient aggregation rule together with the (n, f) it is run at.
struct GarSpec {
  GarRule rule = GarRule::kAverage;
  int n = 1;
  int f = 0;
  // Upper bound on C(n, n - f) for exact MDA subset search.
  std::uint64_t mda_subset_cap = kDefaultMdaSubsetCap;
};

// Checks the rule's (n, f) requirement:
//   krum n >= 2f+3, bulyan n >= 4f+3, mda/median n >= 2f+1, average f = 0.
// Violations are InvalidArgument with a message such as "n >= 4f+3 required".
absl::Status ValidateGarSpec(const GarSpec& spec);

struct KappaValue {
  double value = 0.0;
  GarRule rule = GarRule::kMda;
  int n = 0;
  int f = 0;
};

// Multiplicative constant of the rule's variance-to-norm condition.
//   krum, bulyan: sqrt(2 (n - f + (f (n-f-2) + f^2 (n-f-1)) / (n-2f-2)))
//   mda:          sqrt(8) f / (n - f)
//   median:       sqrt(n - f)
// Average has none and yields FailedPrecondition.
absl::StatusOr<KappaValue> Kappa(const GarSpec& spec);

// R = F(g_1, ..., g_n). Inputs must be exactly spec.n vectors of a common
// dimension. Tie-breaking is deterministic:
//   krum     lowest index among minimal scores (relative tolerance 1e-12)
//   median   even count -> mean of the two central order statistics
//   mda      lexicographically smallest index set among minimal diameters
//   bulyan   per coordinate, closest values to the median, ties to the lower
//            value
absl::StatusOr<Vector> Aggregate(const GarSpec& spec,
                                 std::span<const Vector> grads);

// Exhaustive MDA over all C(n, n - f) subsets, independent of the search used
// by Aggregate. Fails with ResourceExhausted when the count exceeds `cap`.
absl::StatusOr<Vector> MdaBruteforce(std::span<const Vector> grads, int n,
                                     int f,
                                     std::uint64_t cap = kDefaultMdaSubsetCap);

// Lower-level pieces, exposed for tests and diagnostics.
namespace gar_internal {

// Krum scores: sum of squared distances to the n - f - 2 closest others.
std::vector<double> KrumScores(std::span<const Vector> grads, int f);

// Index chosen by Krum over `grads` (lowest score, lowest index on ties).
std::size_t KrumSelect(std::span<const Vector> grads, int f);

// Index set (ascending) selected by the MDA search.
std::vector<std::size_t> MdaSelect(std::span<const Vector> grads, int f);

// Median of the values; mean of the two central ones for even counts.
double ScalarMedian(std::vector<double> values);

// Mean that depends only on the multiset of inputs (not their order) and
// returns g exactly when all inputs equal g.
Vector CanonicalMean(std::span<const Vector* const> vectors);

// C(n, k), saturating at UINT64_MAX.
std::uint64_t BinomialCount(int n, int k);

}  // namespace gar_internal

}  // namespace byzdp

#endif  // BYZDP_AGGREGATION_H_
