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

#include "byzdp/aggregation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace byzdp {
namespace {

constexpr double kKrumTieTolerance = 1e-12;

bool LexLess(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

absl::Status CheckInputs(const GarSpec& spec, std::span<const Vector> grads) {
  if (static_cast<int>(grads.size()) != spec.n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "aggregation expects n=", spec.n, " gradients, got ", grads.size()));
  }
  const Eigen::Index d = grads.front().size();
  if (d < 1) return absl::InvalidArgumentError("gradients must have d >= 1");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != d) {
      return absl::InvalidArgumentError(
          absl::StrCat("dimension mismatch: gradient ", i, " has ",
                       grads[i].size(), " entries, expected ", d));
    }
  }
  return absl::OkStatus();
}

Vector MeanOfIndices(std::span<const Vector> grads,
                     const std::vector<std::size_t>& indices) {
  std::vector<const Vector*> chosen;
  chosen.reserve(indices.size());
  for (std::size_t i : indices) chosen.push_back(&grads[i]);
  return gar_internal::CanonicalMean(chosen);
}

Vector CoordinateMedian(std::span<const Vector> grads) {
  const Eigen::Index d = grads.front().size();
  Vector out(d);
  std::vector<double> column(grads.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < grads.size(); ++i) column[i] = grads[i][j];
    out[j] = gar_internal::ScalarMedian(column);
  }
  return out;
}

Vector Bulyan(std::span<const Vector> grads, int f) {
  const int n = static_cast<int>(grads.size());
  const int selections = n - 2 * f - 2;
  const int kept_per_coordinate = n - 4 * f - 2;

  std::vector<Vector> pool(grads.begin(), grads.end());
  std::vector<Vector> selected;
  selected.reserve(selections);
  for (int k = 0; k < selections; ++k) {
    const std::size_t pick = gar_internal::KrumSelect(pool, f);
    selected.push_back(std::move(pool[pick]));
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  const Eigen::Index d = grads.front().size();
  Vector out(d);
  std::vector<double> column(selected.size());
  for (Eigen::Index j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < selected.size(); ++i) {
      column[i] = selected[i][j];
    }
    const double median = gar_internal::ScalarMedian(column);
    std::sort(column.begin(), column.end(), [median](double a, double b) {
      const double da = std::abs(a - median);
      const double db = std::abs(b - median);
      if (da != db) return da < db;
      return a < b;
    });
    // Closest values; sum in ascending-value order for order independence.
    std::vector<double> closest(column.begin(),
                                column.begin() + kept_per_coordinate);
    std::sort(closest.begin(), closest.end());
    double sum = 0.0;
    for (double v : closest) sum += v - closest.front();
    out[j] = closest.front() + sum / kept_per_coordinate;
  }
  return out;
}

}  // namespace

absl::string_view GarRuleName(GarRule rule) {
  switch (rule) {
    case GarRule::kAverage:
      return "average";
    case GarRule::kKrum:
      return "krum";
    case GarRule::kMda:
      return "mda";
    case GarRule::kMedian:
      return "median";
    case GarRule::kBulyan:
      return "bulyan";
  }
  return "unknown";
}

absl::StatusOr<GarRule> ParseGarRule(absl::string_view name) {
  if (name == "average") return GarRule::kAverage;
  if (name == "krum") return GarRule::kKrum;
  if (name == "mda") return GarRule::kMda;
  if (name == "median") return GarRule::kMedian;
  if (name == "bulyan") return GarRule::kBulyan;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown aggregation rule '", name,
      "' (expected average, krum, mda, median or bulyan)"));
}

absl::Status ValidateGarSpec(const GarSpec& spec) {
  if (spec.n < 1) return absl::InvalidArgumentError("n >= 1 required");
  if (spec.f < 0) return absl::InvalidArgumentError("f >= 0 required");
  const int n = spec.n;
  const int f = spec.f;
  switch (spec.rule) {
    case GarRule::kAverage:
      if (f != 0) {
        return absl::InvalidArgumentError(
            "average requires f = 0 (no κ defined for average under attack)");
      }
      break;
    case GarRule::kKrum:
      if (n < 2 * f + 3) {
        return absl::InvalidArgumentError(absl::StrCat(
            "krum: n ≥ 2f+3 required (n=", n, ", f=", f, ")"));
      }
      break;
    case GarRule::kBulyan:
      if (n < 4 * f + 3) {
        return absl::InvalidArgumentError(absl::StrCat(
            "bulyan: n ≥ 4f+3 required (n=", n, ", f=", f, ")"));
      }
      break;
    case GarRule::kMda:
    case GarRule::kMedian:
      if (n < 2 * f + 1) {
        return absl::InvalidArgumentError(
            absl::StrCat(GarRuleName(spec.rule), ": n ≥ 2f+1 required (n=", n,
                         ", f=", f, ")"));
      }
      if (spec.rule == GarRule::kMda &&
          gar_internal::BinomialCount(n, n - f) > spec.mda_subset_cap) {
        return absl::ResourceExhaustedError(absl::StrCat(
            "mda: C(", n, ", ", n - f, ") subsets exceeds the cap of ",
            spec.mda_subset_cap, "; raise mda_subset_cap"));
      }
      break;
  }
  return absl::OkStatus();
}

absl::StatusOr<KappaValue> Kappa(const GarSpec& spec) {
  if (spec.rule == GarRule::kAverage) {
    return absl::FailedPreconditionError("no κ defined for average");
  }
  if (absl::Status s = ValidateGarSpec(spec);
      !s.ok() && !absl::IsResourceExhausted(s)) {
    return s;
  }
  const double n = spec.n;
  const double f = spec.f;
  KappaValue k{0.0, spec.rule, spec.n, spec.f};
  switch (spec.rule) {
    case GarRule::kKrum:
    case GarRule::kBulyan:
      k.value = std::sqrt(
          2.0 * (n - f + (f * (n - f - 2.0) + f * f * (n - f - 1.0)) /
                             (n - 2.0 * f - 2.0)));
      break;
    case GarRule::kMda:
      k.value = std::sqrt(8.0) * f / (n - f);
      break;
    case GarRule::kMedian:
      k.value = std::sqrt(n - f);
      break;
    case GarRule::kAverage:
      break;
  }
  if (!(k.value > 0.0)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "κ for ", GarRuleName(spec.rule), " at f=", spec.f,
        " is not positive"));
  }
  return k;
}

absl::StatusOr<Vector> Aggregate(const GarSpec& spec,
                                 std::span<const Vector> grads) {
  if (grads.empty()) {
    return absl::InvalidArgumentError("aggregation expects n >= 1 gradients");
  }
  if (absl::Status s = CheckInputs(spec, grads); !s.ok()) return s;
  if (absl::Status s = ValidateGarSpec(spec); !s.ok()) return s;
  switch (spec.rule) {
    case GarRule::kAverage: {
      std::vector<std::size_t> all(grads.size());
      std::iota(all.begin(), all.end(), 0);
      return MeanOfIndices(grads, all);
    }
    case GarRule::kKrum:
      return grads[gar_internal::KrumSelect(grads, spec.f)];
    case GarRule::kMda:
      return MeanOfIndices(grads, gar_internal::MdaSelect(grads, spec.f));
    case GarRule::kMedian:
      return CoordinateMedian(grads);
    case GarRule::kBulyan:
      return Bulyan(grads, spec.f);
  }
  return absl::InternalError("unreachable");
}

absl::StatusOr<Vector> MdaBruteforce(std::span<const Vector> grads, int n,
                                     int f, std::uint64_t cap) {
  GarSpec spec{GarRule::kMda, n, f, cap};
  if (grads.empty()) {
    return absl::InvalidArgumentError("aggregation expects n >= 1 gradients");
  }
  if (absl::Status s = CheckInputs(spec, grads); !s.ok()) return s;
  if (absl::Status s = ValidateGarSpec(spec); !s.ok()) return s;

  const int k = n - f;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_set;
  while (true) {
    double diameter = 0.0;
    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k; ++b) {
        diameter = std::max(diameter, (grads[idx[a]] - grads[idx[b]]).norm());
      }
    }
    if (diameter < best) {
      best = diameter;
      best_set.assign(idx.begin(), idx.end());
    }
    // Next combination in lexicographic order.
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int q = pos + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  return MeanOfIndices(grads, best_set);
}

namespace gar_internal {

std::uint64_t BinomialCount(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (result > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(result);
}

double ScalarMedian(std::vector<double> values) {
  const std::size_t count = values.size();
  const std::size_t mid = count / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (count % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

Vector CanonicalMean(std::span<const Vector* const> vectors) {
  std::vector<const Vector*> sorted(vectors.begin(), vectors.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Vector* a, const Vector* b) { return LexLess(*a, *b); });
  const Vector& ref = *sorted.front();
  Vector offset = Vector::Zero(ref.size());
  for (const Vector* v : sorted) offset += *v - ref;
  return ref + offset / static_cast<double>(sorted.size());
}

std::vector<double> KrumScores(std::span<const Vector> grads, int f) {
  const std::size_t n = grads.size();
  const std::size_t neighbors = n - static_cast<std::size_t>(f) - 2;
  std::vector<double> scores(n, 0.0);
  std::vector<double> dist;
  dist.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist.push_back((grads[i] - grads[j]).squaredNorm());
    }
    std::partial_sort(dist.begin(), dist.begin() + neighbors, dist.end());
    double s = 0.0;
    for (std::size_t q = 0; q < neighbors; ++q) s += dist[q];
    scores[i] = s;
  }
  return scores;
}

std::size_t KrumSelect(std::span<const Vector> grads, int f) {
  const std::vector<double> scores = KrumScores(grads, f);
  const double lowest = *std::min_element(scores.begin(), scores.end());
  // Scores equal up to rounding are ties; the lowest index wins.
  const double tied = lowest * (1.0 + kKrumTieTolerance);
  std::size_t best = 0;
  while (scores[best] > tied) ++best;
  return best;
}

std::vector<std::size_t> MdaSelect(std::span<const Vector> grads, int f) {
  const int n = static_cast<int>(grads.size());
  const int k = n - f;
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = (grads[i] - grads[j]).norm();
    }
  }
  // Depth-first search in lexicographic order with diameter pruning: a
  // partial set whose diameter already reaches the incumbent can never
  // improve on it strictly, and earlier sets win ties.
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_set;
  std::vector<int> current;
  current.reserve(k);
  auto search = [&](auto&& self, int next, double diameter) -> void {
    if (static_cast<int>(current.size()) == k) {
      best = diameter;
      best_set.assign(current.begin(), current.end());
      return;
    }
    const int needed = k - static_cast<int>(current.size());
    for (int i = next; i <= n - needed; ++i) {
      double grown = diameter;
      for (int c : current) grown = std::max(grown, dist(c, i));
      if (grown >= best) continue;
      current.push_back(i);
      self(self, i + 1, grown);
      current.pop_back();
    }
  };
  search(search, 0, 0.0);
  return best_set;
}

}  // namespace gar_internal

}  // namespace byzdp
