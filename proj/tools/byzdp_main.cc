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

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "byzdp/commands.h"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for private, Byzantine-resilient SGD"};
  app.require_subcommand(1);

  byzdp::CommandOptions options;
  std::optional<std::uint64_t> seed_flag;

  CLI::App* run = app.add_subcommand("run", "Run one training configuration");
  run->add_option("config", options.config_path, "Config file")->required();
  run->add_option("--seed", seed_flag, "Master seed (overrides BYZDP_SEED)");
  run->add_option("--out", options.out_dir, "Output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "Run every cell of a grid");
  sweep->add_option("config", options.config_path, "Config file")->required();
  sweep->add_option("--jobs", options.jobs, "Cells run in parallel")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", options.out_dir, "Output directory");

  CLI::App* diagnose =
      app.add_subcommand("diagnose", "Print theoretical quantities for a config");
  diagnose->add_option("config", options.config_path, "Config file")->required();
  diagnose->add_option("--seed", seed_flag, "Master seed (overrides BYZDP_SEED)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? byzdp::kExitOk : byzdp::kExitConfigError;
  }

  options.seed = seed_flag;
  if (const char* env = std::getenv("BYZDP_SEED"); env != nullptr && *env != '\0') {
    options.env_seed = byzdp::ParseSeedText(env);
    if (!options.env_seed.has_value()) {
      std::cerr << "error: BYZDP_SEED is not an unsigned integer: '" << env
                << "'\n";
      return byzdp::kExitConfigError;
    }
  }

  if (*run) return byzdp::CmdRun(options, std::cout, std::cerr);
  if (*sweep) return byzdp::CmdSweep(options, std::cout, std::cerr);
  return byzdp::CmdDiagnose(options, std::cout, std::cerr);
}
