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

#include "byzdp/commands.h"

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "byzdp/config.h"
#include "byzdp/diagnostics.h"
#include "byzdp/engine.h"
#include "byzdp/report.h"

namespace byzdp {
namespace {

int Fail(std::ostream& err, int code, const absl::Status& status) {
  err << "error: " << status.message() << "\n";
  return code;
}

absl::Status EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create output directory '", dir, "': ", ec.message()));
  }
  return absl::OkStatus();
}

std::string PathIn(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

absl::StatusOr<ConfigFile> LoadWithOverrides(const CommandOptions& options) {
  absl::StatusOr<ConfigFile> cfg = LoadConfig(options.config_path);
  if (!cfg.ok()) return cfg;
  std::optional<std::uint64_t> seed = options.seed;
  if (!seed.has_value()) seed = options.env_seed;
  if (seed.has_value()) {
    cfg->run.master_seed = *seed;
    cfg->grid.seed.clear();
  }
  return cfg;
}

// Upsilon from the config, else the data dispersion at theta_1.
absl::StatusOr<std::pair<double, std::string>> ResolveUpsilon(
    const ConfigFile& cfg, const Problem& problem) {
  if (cfg.upsilon.has_value()) {
    return std::make_pair(*cfg.upsilon, std::string("configured"));
  }
  const Vector theta1 =
      InitialParameters(problem.model.dimension(), cfg.run.master_seed);
  absl::StatusOr<double> pop =
      PopulationVariance(problem.model, theta1, problem.data);
  if (!pop.ok()) return pop.status();
  return std::make_pair(std::sqrt(*pop), std::string("estimated at theta_1"));
}

// Lines shared by the run summary and the diagnose report.
struct TheoryReport {
  std::vector<std::string> lines;
};

void AppendPrivacyLines(const RunConfig& run, double s, std::size_t m,
                        double delta_slack, std::vector<std::string>& lines) {
  lines.push_back(absl::StrCat("noise_scale_s = ", FormatDouble(s)));
  if (!run.privacy.has_value()) {
    lines.push_back("privacy = none");
    return;
  }
  absl::StatusOr<PrivacyParams> p =
      CalibratePrivacy(run.clip, run.b, static_cast<int>(m),
                       run.privacy->epsilon, run.privacy->delta);
  if (p.ok()) {
    lines.push_back(absl::StrCat("epsilon_inner = ", FormatDouble(p->epsilon_inner)));
    if (p->inner_epsilon_warning) {
      lines.push_back(
          "warning = epsilon_inner >= 1: Gaussian-mechanism bound applied "
          "outside its stated (0, 1) range");
    }
  }
  lines.push_back(absl::StrCat(
      "amplified_epsilon = ",
      FormatDouble(AmplifiedEpsilon(run.privacy->epsilon, run.b,
                                    static_cast<int>(m)))));
  absl::StatusOr<CompositionReport> comp =
      Compose(*run.privacy, run.rounds, delta_slack);
  if (comp.ok()) {
    lines.push_back(absl::StrCat("composition_steps = ", comp->steps));
    lines.push_back(absl::StrCat("composition_basic_epsilon = ",
                                 FormatDouble(comp->basic.epsilon)));
    lines.push_back(absl::StrCat("composition_basic_delta = ",
                                 FormatDouble(comp->basic.delta)));
    lines.push_back(absl::StrCat("composition_advanced_epsilon = ",
                                 FormatDouble(comp->advanced.epsilon)));
    lines.push_back(absl::StrCat("composition_advanced_delta = ",
                                 FormatDouble(comp->advanced.delta)));
    lines.push_back(absl::StrCat("composition_delta_slack = ",
                                 FormatDouble(comp->delta_slack)));
    lines.push_back(absl::StrCat("composition_tighter = ", comp->tighter()));
  }
}

void AppendEtaLines(const RunConfig& run, const Problem& problem,
                    double upsilon, const std::string& upsilon_source,
                    std::vector<std::string>& lines) {
  lines.push_back(absl::StrCat("upsilon = ", FormatDouble(upsilon), " (",
                               upsilon_source, ")"));
  absl::StatusOr<KappaValue> kappa = Kappa(run.gar_spec());
  if (!kappa.ok()) {
    lines.push_back(absl::StrCat("eta_bounds = not applicable (",
                                 kappa.status().message(), ")"));
    return;
  }
  if (!run.privacy.has_value()) {
    lines.push_back("eta_bounds = not applicable (no privacy)");
    return;
  }
  absl::StatusOr<EtaBounds> eta = ComputeEtaBounds(
      {kappa->value, run.clip, problem.model.dimension(), run.b,
       static_cast<int>(problem.data.size()), run.privacy->epsilon,
       run.privacy->delta, upsilon});
  if (!eta.ok()) {
    lines.push_back(absl::StrCat("eta_bounds = not applicable (",
                                 eta.status().message(), ")"));
    return;
  }
  lines.push_back(absl::StrCat("eta_sq_necessary = ",
                               FormatDouble(eta->eta_sq_necessary)));
  lines.push_back(absl::StrCat("eta_sq_sufficient = ",
                               FormatDouble(eta->eta_sq_sufficient)));
}

absl::Status PrepareRun(const ConfigFile& cfg, Problem& problem_out) {
  if (absl::Status s = ValidateRunConfig(cfg.run); !s.ok()) return s;
  absl::StatusOr<Problem> problem = BuildProblem(cfg.run.model, cfg.run.data);
  if (!problem.ok()) return problem.status();
  absl::StatusOr<double> s = ResolveNoiseScale(cfg.run, problem->data.size());
  if (!s.ok()) return s.status();
  problem_out = *std::move(problem);
  return absl::OkStatus();
}

}  // namespace

std::optional<std::uint64_t> ParseSeedText(const char* text) {
  if (text == nullptr || *text == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const char* end = text + std::strlen(text);
  const auto [ptr, ec] = std::from_chars(text, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

int CmdRun(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  absl::StatusOr<ConfigFile> cfg = LoadWithOverrides(options);
  if (!cfg.ok()) return Fail(err, kExitConfigError, cfg.status());
  if (cfg->has_grid) {
    return Fail(err, kExitConfigError,
                absl::InvalidArgumentError(
                    "config has grid lists; use the sweep command"));
  }
  // Fail fast: everything is validated before any round runs.
  absl::StatusOr<Problem> problem = absl::InternalError("unset");
  {
    Problem p{*Model::Logistic(1), *Dataset::Create({DataPoint{Vector::Zero(1), 0}})};
    if (absl::Status s = PrepareRun(*cfg, p); !s.ok()) {
      return Fail(err, kExitConfigError, s);
    }
    problem = std::move(p);
  }
  absl::StatusOr<RunResult> result = Run(cfg->run, *problem);
  if (!result.ok()) return Fail(err, kExitRuntimeError, result.status());

  if (absl::Status s = EnsureDirectory(options.out_dir); !s.ok()) {
    return Fail(err, kExitRuntimeError, s);
  }
  const std::string id = CellId(cfg->run);
  const std::string metrics_name = absl::StrCat("metrics-", id, ".csv");
  if (absl::Status s = WriteFileAtomic(PathIn(options.out_dir, metrics_name),
                                       FormatMetricsCsv(id, cfg->run, result->metrics));
      !s.ok()) {
    return Fail(err, kExitRuntimeError, s);
  }
  if (absl::Status s = WriteFileAtomic(PathIn(options.out_dir, "config.resolved"),
                                       ResolvedConfig(cfg->run));
      !s.ok()) {
    return Fail(err, kExitRuntimeError, s);
  }

  const MetricsDigest digest = DigestMetrics(result->metrics);
  std::vector<std::string> lines;
  lines.push_back(absl::StrCat("run_id = ", id));
  lines.push_back(absl::StrCat("metrics_file = ", metrics_name));
  lines.push_back(absl::StrCat("rows = ", digest.rows));
  if (digest.rows > 0) {
    lines.push_back(absl::StrCat("final_loss = ", FormatDouble(digest.final_loss)));
    lines.push_back(absl::StrCat("min_sq_grad_norm = ",
                                 FormatDouble(digest.min_sq_grad_norm)));
  }
  if (digest.final_accuracy.has_value()) {
    lines.push_back(absl::StrCat("final_accuracy = ",
                                 FormatDouble(*digest.final_accuracy)));
    lines.push_back(absl::StrCat("max_accuracy = ",
                                 FormatDouble(*digest.max_accuracy)));
  }
  AppendPrivacyLines(cfg->run, result->noise_scale, problem->data.size(),
                     cfg->delta_slack, lines);
  absl::StatusOr<std::pair<double, std::string>> ups =
      ResolveUpsilon(*cfg, *problem);
  if (ups.ok()) {
    AppendEtaLines(cfg->run, *problem, ups->first, ups->second, lines);
  }
  const std::string summary = absl::StrCat(absl::StrJoin(lines, "\n"), "\n");
  if (absl::Status s = WriteFileAtomic(PathIn(options.out_dir, "summary.txt"), summary);
      !s.ok()) {
    return Fail(err, kExitRuntimeError, s);
  }
  out << summary;
  return kExitOk;
}

int CmdSweep(const CommandOptions& options, std::ostream& out,
             std::ostream& err) {
  absl::StatusOr<ConfigFile> cfg = LoadWithOverrides(options);
  if (!cfg.ok()) return Fail(err, kExitConfigError, cfg.status());
  if (options.jobs < 1) {
    return Fail(err, kExitConfigError,
                absl::InvalidArgumentError("--jobs must be >= 1"));
  }
  absl::StatusOr<Problem> problem = BuildProblem(cfg->run.model, cfg->run.data);
  if (!problem.ok()) return Fail(err, kExitConfigError, problem.status());

  const std::vector<SweepCellResult> results =
      Sweep(cfg->run, cfg->grid, options.jobs);
  if (absl::Status s = EnsureDirectory(options.out_dir); !s.ok()) {
    return Fail(err, kExitRuntimeError, s);
  }
  int ok_cells = 0;
  for (const SweepCellResult& r : results) {
    if (!r.ok) continue;
    ++ok_cells;
    const std::string id = CellId(r.cell.config);
    if (absl::Status s = WriteFileAtomic(
            PathIn(options.out_dir, absl::StrCat("metrics-", id, ".csv")),
            FormatMetricsCsv(id, r.cell.config, r.metrics));
        !s.ok()) {
      return Fail(err, kExitRuntimeError, s);
    }
  }
  const std::vector<AggregateRow> aggregate = AggregateSweep(results);
  std::string resolved = ResolvedConfig(cfg->run);
  absl::StrAppend(&resolved, "# grid cells = ", results.size(), "\n");
  for (const SweepCellResult& r : results) {
    absl::StrAppend(&resolved, "# cell ", r.cell.index, " = ", CellId(r.cell.config), "\n");
  }
  for (const auto& [name, content] :
       {std::pair<std::string, std::string>{"summary.csv",
                                            FormatSweepSummaryCsv(results)},
        {"aggregate.csv", FormatAggregateCsv(aggregate)},
        {"config.resolved", resolved}}) {
    if (absl::Status s = WriteFileAtomic(PathIn(options.out_dir, name), content);
        !s.ok()) {
      return Fail(err, kExitRuntimeError, s);
    }
  }
  out << "cells = " << results.size() << "\n";
  out << "cells_ok = " << ok_cells << "\n";
  out << "cells_failed = " << results.size() - ok_cells << "\n";
  for (const SweepCellResult& r : results) {
    if (!r.ok) out << "failed cell " << r.cell.index << ": " << r.failure << "\n";
  }
  out << FormatAggregateCsv(aggregate);
  if (ok_cells == 0) {
    err << "error: every sweep cell failed\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

int CmdDiagnose(const CommandOptions& options, std::ostream& out,
                std::ostream& err) {
  absl::StatusOr<ConfigFile> cfg = LoadWithOverrides(options);
  if (!cfg.ok()) return Fail(err, kExitConfigError, cfg.status());
  const RunConfig& run = cfg->run;
  Problem problem{*Model::Logistic(1), *Dataset::Create({DataPoint{Vector::Zero(1), 0}})};
  if (absl::Status s = PrepareRun(*cfg, problem); !s.ok()) {
    return Fail(err, kExitConfigError, s);
  }
  absl::StatusOr<KappaValue> kappa = Kappa(run.gar_spec());
  if (!kappa.ok()) return Fail(err, kExitConfigError, kappa.status());

  const std::size_t m = problem.data.size();
  const int d = problem.model.dimension();
  const double s = *ResolveNoiseScale(run, m);
  std::vector<std::string> lines;
  lines.push_back(absl::StrCat("gar = ", GarRuleName(run.gar), " (n = ", run.n,
                               ", f = ", run.f, ")"));
  lines.push_back(absl::StrCat("kappa = ", FormatDouble(kappa->value)));
  lines.push_back(absl::StrCat("d = ", d));
  lines.push_back(absl::StrCat("m = ", m));
  AppendPrivacyLines(run, s, m, cfg->delta_slack, lines);

  absl::StatusOr<std::pair<double, std::string>> ups = ResolveUpsilon(*cfg, problem);
  if (!ups.ok()) return Fail(err, kExitRuntimeError, ups.status());
  AppendEtaLines(run, problem, ups->first, ups->second, lines);

  const double sigma = SigmaTotal(ups->first, d, s, run.clip);
  lines.push_back(absl::StrCat("sigma = ", FormatDouble(sigma)));

  // Convergence bound for user-supplied (alpha, mu).
  if (!cfg->alpha.has_value() || !cfg->mu.has_value()) {
    lines.push_back("convergence_bound = not computed (set alpha and mu)");
  } else {
    absl::StatusOr<double> smoothness = SmoothnessConstant(problem.model, problem.data);
    absl::StatusOr<OptimalLoss> qstar = EstimateOptimalLoss(problem.model, problem.data);
    if (!smoothness.ok()) {
      lines.push_back(absl::StrCat("convergence_bound = not applicable (",
                                   smoothness.status().message(), ")"));
    } else if (!qstar.ok()) {
      return Fail(err, kExitRuntimeError, qstar.status());
    } else {
      const Vector theta1 = InitialParameters(d, run.master_seed);
      const double q1 = *EmpiricalLoss(problem.model, theta1, problem.data);
      double eta_sq = kappa->value * kappa->value * ups->first * ups->first;
      std::string eta_source = "kappa^2 upsilon^2 (no privacy)";
      if (run.privacy.has_value()) {
        absl::StatusOr<EtaBounds> eta = ComputeEtaBounds(
            {kappa->value, run.clip, d, run.b, static_cast<int>(m),
             run.privacy->epsilon, run.privacy->delta, ups->first});
        if (eta.ok()) {
          eta_sq = eta->eta_sq_sufficient;
          eta_source = "eta_sq_sufficient";
        }
      }
      absl::StatusOr<double> bound = ConvergenceBound(
          {static_cast<double>(run.rounds), eta_sq, *cfg->alpha, *cfg->mu,
           sigma, *smoothness, q1, std::min(q1, qstar->value)});
      if (!bound.ok()) return Fail(err, kExitConfigError, bound.status());
      lines.push_back(absl::StrCat("smoothness_L = ", FormatDouble(*smoothness)));
      lines.push_back(absl::StrCat("initial_loss = ", FormatDouble(q1)));
      lines.push_back(absl::StrCat("optimal_loss = ", FormatDouble(qstar->value),
                                   qstar->exact ? " (exact)" : " (upper bound)"));
      lines.push_back(absl::StrCat("eta_sq_used = ", FormatDouble(eta_sq), " (",
                                   eta_source, ")"));
      lines.push_back(absl::StrCat("convergence_bound = ", FormatDouble(*bound),
                                   " (T = ", run.rounds, ")"));
    }
  }

  if (problem.model.kind() != ModelKind::kQuadratic) {
    lines.push_back("vn_violation = not applicable (needs the quadratic model)");
  } else if (s == 0.0) {
    lines.push_back("vn_violation = not applicable (s = 0)");
  } else {
    absl::StatusOr<VnMargin> witness =
        FindVnViolation(problem.model, problem.data, run.gar_spec(), s, run.b);
    if (!witness.ok()) return Fail(err, kExitRuntimeError, witness.status());
    absl::StatusOr<Vector> star = QuadraticMinimizer(problem.model, problem.data);
    lines.push_back(absl::StrCat("vn_violation_distance = ",
                                 FormatDouble((witness->theta - *star).norm())));
    lines.push_back(absl::StrCat("vn_violation_lhs = ", FormatDouble(witness->lhs)));
    lines.push_back(absl::StrCat("vn_violation_rhs = ", FormatDouble(witness->rhs)));
    lines.push_back(absl::StrCat("vn_violation_satisfied = ",
                                 witness->satisfied ? "true" : "false"));
  }
  out << absl::StrJoin(lines, "\n") << "\n";
  return kExitOk;
}

}  // namespace byzdp
