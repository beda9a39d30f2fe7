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

#ifndef BYZDP_COMMANDS_H_
#define BYZDP_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace byzdp {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitRuntimeError = 3,
};

struct CommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  // --seed; wins over env_seed, which wins over the config file.
  std::optional<std::uint64_t> seed;
  // BYZDP_SEED.
  std::optional<std::uint64_t> env_seed;
  int jobs = 1;
};

// Writes metrics-<id>.csv, summary.txt and config.resolved into out_dir.
int CmdRun(const CommandOptions& options, std::ostream& out, std::ostream& err);

// Writes metrics-<id>.csv per cell, summary.csv, aggregate.csv and
// config.resolved into out_dir. Exit 0 when at least one cell succeeded.
int CmdSweep(const CommandOptions& options, std::ostream& out,
             std::ostream& err);

// Prints kappa, s, eps', eta bounds, sigma, the convergence bound and (for
// quadratic models) the VN-violation witness.
int CmdDiagnose(const CommandOptions& options, std::ostream& out,
                std::ostream& err);

// Parses BYZDP_SEED-style text; nullopt when empty or malformed.
std::optional<std::uint64_t> ParseSeedText(const char* text);

}  // namespace byzdp

#endif  // BYZDP_COMMANDS_H_
