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

#ifndef BYZDP_CONFIG_H_
#define BYZDP_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "byzdp/engine.h"

namespace byzdp {

// A parsed configuration file.
//
// Format: one `key = value` per line, `#` starts a comment. Grid keys (b,
// epsilon, gar, attack, f, seed) also accept lists `[v1, v2, ...]`; integer
// lists accept ranges such as `[1..5]`. Unknown and duplicate keys are
// rejected.
struct ConfigFile {
  RunConfig run;
  SweepGrid grid;
  bool has_grid = false;

  // Slack delta'' of the advanced composition bound.
  double delta_slack = 1e-4;
  // Data-variance bound used in the eta bounds; estimated when unset.
  std::optional<double> upsilon;
  // Convergence constants of the aggregation rule; no defaults.
  std::optional<double> alpha;
  std::optional<double> mu;
};

absl::StatusOr<ConfigFile> ParseConfig(absl::string_view text);
absl::StatusOr<ConfigFile> LoadConfig(const std::string& path);

// Canonical `key = value` rendering of a single run configuration.
std::string ResolvedConfig(const RunConfig& config);

// Stable 16-hex-digit id: FNV-1a 64 of ResolvedConfig.
std::string CellId(const RunConfig& config);

}  // namespace byzdp

#endif  // BYZDP_CONFIG_H_
