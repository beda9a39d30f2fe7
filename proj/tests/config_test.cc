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

#include "byzdp/config.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/numbers.h"
#include "absl/strings/str_split.h"
#include "byzdp/commands.h"
#include "byzdp/report.h"
#include "gtest/gtest.h"

namespace byzdp {
namespace {

namespace fs = std::filesystem;

constexpr char kMinimal[] = R"(
# quadratic, no attack, no noise
model = quadratic
dataset = targets
m = 100
features = 4
n = 5
f = 0
gar = average
b = 10
T = 30
eval_every = 3
clip = 100
)";

constexpr char kPrivateLogistic[] = R"(
model = logistic
lambda = 1e-4
dataset = blobs
m = 400
features = 6
n = 11
f = 2
gar = mda
attack = little
epsilon = 0.5
delta = 1e-5
b = 32
T = 20
schedule = constant
gamma = 0.5
momentum = 0.9
seed = 4
)";

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / ("byzdp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path WriteConfig(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "run.cfg";
  std::ofstream(path) << text;
  return path;
}

std::vector<fs::path> MetricsFiles(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().starts_with("metrics-")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int CountLines(const std::string& text) {
  return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

TEST(ParseConfigTest, MinimalConfig) {
  const ConfigFile cfg = *ParseConfig(kMinimal);
  EXPECT_EQ(cfg.run.model.kind, ModelKind::kQuadratic);
  EXPECT_EQ(cfg.run.data.m, 100u);
  EXPECT_EQ(cfg.run.rounds, 30);
  EXPECT_FALSE(cfg.run.privacy.has_value());
  EXPECT_FALSE(cfg.has_grid);
}

TEST(ParseConfigTest, ResolvedConfigRoundTrips) {
  const ConfigFile cfg = *ParseConfig(kPrivateLogistic);
  const std::string resolved = ResolvedConfig(cfg.run);
  const ConfigFile again = *ParseConfig(resolved);
  EXPECT_EQ(ResolvedConfig(again.run), resolved);
  EXPECT_EQ(CellId(again.run), CellId(cfg.run));
  EXPECT_EQ(CellId(cfg.run).size(), 16u);
  EXPECT_EQ(again.run.attack.zeta, 1.0);
  EXPECT_EQ(again.run.privacy->delta, 1e-5);
}

TEST(ParseConfigTest, Rejections) {
  auto error = [](const std::string& text) {
    const absl::StatusOr<ConfigFile> r = ParseConfig(text);
    EXPECT_FALSE(r.ok()) << text;
    return r.ok() ? std::string() : std::string(r.status().message());
  };
  EXPECT_NE(error("colour = red\n").find("colour"), std::string::npos);
  EXPECT_NE(error("n = 5\nn = 6\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error("n = five\n").find("n"), std::string::npos);
  EXPECT_NE(error("delta = 1e-5\n").find("epsilon"), std::string::npos);
  EXPECT_NE(error("momentum = [0.1, 0.2]\n").find("grid"), std::string::npos);
  error("no equals sign\n");
  error("b = [4, \n");
}

TEST(ParseConfigTest, BulyanConstraintFailsAtParseTime) {
  std::string cfg = kPrivateLogistic;
  cfg.replace(cfg.find("n = 11"), 6, "n = 15");
  cfg.replace(cfg.find("f = 2"), 5, "f = 6");
  cfg.replace(cfg.find("gar = mda"), 9, "gar = bulyan");
  const absl::StatusOr<ConfigFile> r = ParseConfig(cfg);
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.status().message().find("n ≥ 4f+3 required"), absl::string_view::npos)
      << r.status();
}

TEST(ParseConfigTest, GridListsAndRanges) {
  std::string text = kPrivateLogistic;
  text.replace(text.find("b = 32"), 6, "b = [16, 64]");
  text.replace(text.find("seed = 4"), 8, "seed = [1..5]");
  text.replace(text.find("epsilon = 0.5"), 13, "epsilon = [none, 0.5]");
  const ConfigFile grid = *ParseConfig(text);
  EXPECT_TRUE(grid.has_grid);
  EXPECT_EQ(grid.grid.b, (std::vector<int>{16, 64}));
  EXPECT_EQ(grid.grid.seed.size(), 5u);
  ASSERT_EQ(grid.grid.epsilon.size(), 2u);
  EXPECT_FALSE(grid.grid.epsilon[0].has_value());
  EXPECT_EQ(ExpandGrid(grid.run, grid.grid).size(), 20u);
}

TEST(ReportTest, CsvSchemaAndDigest) {
  const ConfigFile cfg = *ParseConfig(kPrivateLogistic);
  const RunResult r = *byzdp::Run(cfg.run);
  const std::string csv = FormatMetricsCsv("abc", cfg.run, r.metrics);
  const std::vector<std::string> lines = absl::StrSplit(csv, '\n', absl::SkipEmpty());
  ASSERT_EQ(lines.size(), 21u);
  EXPECT_EQ(lines[0],
            "run_id,round,loss,grad_norm,min_sq_grad_norm,accuracy,s,gamma,gar,"
            "attack,f,epsilon,delta,b,seed");
  const std::vector<std::string> cells = absl::StrSplit(lines[1], ',');
  ASSERT_EQ(cells.size(), 15u);
  double loss = 0;
  ASSERT_TRUE(absl::SimpleAtod(cells[2], &loss));
  EXPECT_EQ(loss, r.metrics[0].loss);  // 17 significant digits round-trip
  EXPECT_EQ(cells[8], "mda");
  EXPECT_EQ(cells[9], "little");

  const MetricsDigest from_csv = *DigestMetricsCsv(csv);
  const MetricsDigest direct = DigestMetrics(r.metrics);
  EXPECT_EQ(from_csv.rows, direct.rows);
  EXPECT_EQ(from_csv.final_loss, direct.final_loss);
  EXPECT_EQ(from_csv.min_sq_grad_norm, direct.min_sq_grad_norm);
  EXPECT_EQ(from_csv.max_accuracy, direct.max_accuracy);
}

TEST(ReportTest, NonClassifierHasEmptyAccuracyAndNoneEpsilon) {
  const ConfigFile cfg = *ParseConfig(kMinimal);
  const std::string csv = FormatMetricsCsv("x", cfg.run, byzdp::Run(cfg.run)->metrics);
  const std::vector<std::string> lines = absl::StrSplit(csv, '\n', absl::SkipEmpty());
  const std::vector<std::string> cells = absl::StrSplit(lines[1], ',');
  EXPECT_EQ(cells[5], "");
  EXPECT_EQ(cells[11], "none");
  EXPECT_EQ(cells[12], "none");
}

TEST(CmdRunTest, RowCountAndFiles) {
  const fs::path dir = FreshDir("run_rows");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, kMinimal).string();
  opt.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  ASSERT_EQ(CmdRun(opt, out, err), kExitOk) << err.str();
  const std::vector<fs::path> metrics = MetricsFiles(dir / "out");
  ASSERT_EQ(metrics.size(), 1u);
  EXPECT_EQ(CountLines(ReadFile(metrics[0])), 1 + 30 / 3);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.txt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "config.resolved"));
  EXPECT_NE(out.str().find("privacy = none"), std::string::npos);
}

TEST(CmdRunTest, ByteIdenticalReruns) {
  const fs::path dir = FreshDir("run_repeat");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, kPrivateLogistic).string();
  std::ostringstream out, err;
  opt.out_dir = (dir / "a").string();
  ASSERT_EQ(CmdRun(opt, out, err), kExitOk) << err.str();
  opt.out_dir = (dir / "b").string();
  ASSERT_EQ(CmdRun(opt, out, err), kExitOk) << err.str();
  const auto a = MetricsFiles(dir / "a");
  const auto b = MetricsFiles(dir / "b");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].filename(), b[0].filename());
  EXPECT_EQ(ReadFile(a[0]), ReadFile(b[0]));
  EXPECT_EQ(ReadFile(dir / "a" / "summary.txt"), ReadFile(dir / "b" / "summary.txt"));
}

TEST(CmdRunTest, SeedPrecedence) {
  const fs::path dir = FreshDir("run_seed");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, kPrivateLogistic).string();
  opt.out_dir = dir.string();
  opt.env_seed = 77;
  std::ostringstream out, err;
  ASSERT_EQ(CmdRun(opt, out, err), kExitOk);
  EXPECT_NE(ReadFile(dir / "config.resolved").find("seed = 77\n"), std::string::npos);
  opt.seed = 78;
  ASSERT_EQ(CmdRun(opt, out, err), kExitOk);
  EXPECT_NE(ReadFile(dir / "config.resolved").find("seed = 78\n"), std::string::npos);
}

TEST(CmdRunTest, ConfigErrorsExitTwo) {
  const fs::path dir = FreshDir("run_errors");
  CommandOptions opt;
  std::ostringstream out, err;
  opt.config_path = (dir / "missing.cfg").string();
  EXPECT_EQ(CmdRun(opt, out, err), kExitConfigError);
  std::string bulyan = kPrivateLogistic;
  bulyan.replace(bulyan.find("gar = mda"), 9, "gar = bulyan");
  bulyan.replace(bulyan.find("f = 2"), 5, "f = 3");
  opt.config_path = WriteConfig(dir, bulyan).string();
  opt.out_dir = (dir / "out").string();
  EXPECT_EQ(CmdRun(opt, out, err), kExitConfigError);
  EXPECT_NE(err.str().find("4f+3"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(CmdSweepTest, GroupingAndRecomputedMeans) {
  const fs::path dir = FreshDir("sweep_groups");
  std::string text = kPrivateLogistic;
  text.replace(text.find("b = 32"), 6, "b = [16, 64]");
  text.replace(text.find("seed = 4"), 8, "seed = [1..5]");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, text).string();
  opt.out_dir = dir.string();
  opt.jobs = 3;
  std::ostringstream out, err;
  ASSERT_EQ(CmdSweep(opt, out, err), kExitOk) << err.str();

  const std::vector<std::string> summary =
      absl::StrSplit(ReadFile(dir / "summary.csv"), '\n', absl::SkipEmpty());
  ASSERT_EQ(summary.size(), 11u);
  EXPECT_EQ(MetricsFiles(dir).size(), 10u);
  const std::vector<std::string> aggregate =
      absl::StrSplit(ReadFile(dir / "aggregate.csv"), '\n', absl::SkipEmpty());
  ASSERT_EQ(aggregate.size(), 3u);

  // Recompute each group's mean max accuracy from the per-cell metrics files.
  std::map<std::string, std::vector<double>> by_b;
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const std::vector<std::string> cells = absl::StrSplit(summary[i], ',');
    const std::string csv = ReadFile(dir / ("metrics-" + cells[0] + ".csv"));
    by_b[cells[1]].push_back(*DigestMetricsCsv(csv)->max_accuracy);
  }
  for (std::size_t i = 1; i < aggregate.size(); ++i) {
    const std::vector<std::string> cells = absl::StrSplit(aggregate[i], ',');
    const std::vector<double>& accs = by_b.at(cells[0]);
    ASSERT_EQ(accs.size(), 5u);
    double sum = 0;
    for (double a : accs) sum += a;
    double mean = 0;
    ASSERT_TRUE(absl::SimpleAtod(cells[7], &mean));
    EXPECT_NEAR(mean, sum / 5, 1e-15);
  }
}

TEST(CmdSweepTest, FailedCellIsIsolated) {
  const fs::path dir = FreshDir("sweep_isolation");
  std::string text = kPrivateLogistic;
  text.replace(text.find("gar = mda"), 9, "gar = [mda, bulyan]");
  text.replace(text.find("n = 11"), 6, "n = 14");
  text.replace(text.find("f = 2"), 5, "f = 3");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, text).string();
  opt.out_dir = dir.string();
  std::ostringstream out, err;
  ASSERT_EQ(CmdSweep(opt, out, err), kExitOk) << err.str();
  const std::string summary = ReadFile(dir / "summary.csv");
  EXPECT_NE(summary.find(",mda,little,3,4,ok,"), std::string::npos) << summary;
  EXPECT_NE(summary.find(",bulyan,little,3,4,failed,"), std::string::npos) << summary;
  EXPECT_EQ(MetricsFiles(dir).size(), 1u);
}

TEST(CmdSweepTest, JobsDoNotChangeSummary) {
  std::string text = kPrivateLogistic;
  text.replace(text.find("b = 32"), 6, "b = [16, 64]");
  text.replace(text.find("seed = 4"), 8, "seed = [1, 2]");
  const fs::path one = FreshDir("sweep_jobs1");
  const fs::path many = FreshDir("sweep_jobs8");
  CommandOptions opt;
  opt.config_path = WriteConfig(one, text).string();
  std::ostringstream out, err;
  opt.out_dir = one.string();
  opt.jobs = 1;
  ASSERT_EQ(CmdSweep(opt, out, err), kExitOk);
  opt.out_dir = many.string();
  opt.jobs = 8;
  ASSERT_EQ(CmdSweep(opt, out, err), kExitOk);
  EXPECT_EQ(ReadFile(one / "summary.csv"), ReadFile(many / "summary.csv"));
  EXPECT_EQ(ReadFile(one / "aggregate.csv"), ReadFile(many / "aggregate.csv"));
}

TEST(CmdDiagnoseTest, MdaKappaLine) {
  const fs::path dir = FreshDir("diag_mda");
  std::string text = kPrivateLogistic;
  text.replace(text.find("n = 11"), 6, "n = 15");
  text.replace(text.find("f = 2"), 5, "f = 3");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, text).string();
  std::ostringstream out, err;
  ASSERT_EQ(CmdDiagnose(opt, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("kappa = 0.7071"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("vn_violation = not applicable"), std::string::npos);
}

TEST(CmdDiagnoseTest, AverageHasNoKappa) {
  const fs::path dir = FreshDir("diag_avg");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, kMinimal).string();
  std::ostringstream out, err;
  EXPECT_EQ(CmdDiagnose(opt, out, err), kExitConfigError);
  EXPECT_NE(err.str().find("no κ defined for average"), std::string::npos) << err.str();

  std::string attacked = kMinimal;
  attacked.replace(attacked.find("f = 0"), 5, "f = 1");
  opt.config_path = WriteConfig(dir, attacked).string();
  std::ostringstream out2, err2;
  EXPECT_EQ(CmdDiagnose(opt, out2, err2), kExitConfigError);
  EXPECT_NE(err2.str().find("no κ defined for average"), std::string::npos) << err2.str();
}

TEST(CmdDiagnoseTest, NoiselessQuadraticSkipsWitness) {
  const fs::path dir = FreshDir("diag_quad");
  std::string text = kMinimal;
  text.replace(text.find("n = 5"), 5, "n = 15");
  text.replace(text.find("f = 0"), 5, "f = 6");
  text.replace(text.find("gar = average"), 13, "gar = median");
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, text).string();
  std::ostringstream out, err;
  ASSERT_EQ(CmdDiagnose(opt, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("not applicable (s = 0)"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("kappa = 3\n"), std::string::npos) << out.str();
}

TEST(CmdDiagnoseTest, ConvergenceBoundWithConstants) {
  const fs::path dir = FreshDir("diag_bound");
  std::string text = kMinimal;
  text.replace(text.find("n = 5"), 5, "n = 15");
  text.replace(text.find("f = 0"), 5, "f = 3");
  text.replace(text.find("gar = average"), 13, "gar = mda");
  text += "epsilon = 0.1\ndelta = 1e-5\nalpha = 0\nmu = 1\nupsilon = 1\n";
  CommandOptions opt;
  opt.config_path = WriteConfig(dir, text).string();
  std::ostringstream out, err;
  ASSERT_EQ(CmdDiagnose(opt, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("convergence_bound = "), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("vn_violation_satisfied = false"), std::string::npos);
}

TEST(ParseSeedTextTest, Values) {
  EXPECT_EQ(ParseSeedText("42"), 42u);
  EXPECT_EQ(ParseSeedText("18446744073709551615"), UINT64_MAX);
  EXPECT_FALSE(ParseSeedText("").has_value());
  EXPECT_FALSE(ParseSeedText("-1").has_value());
  EXPECT_FALSE(ParseSeedText("4x").has_value());
  EXPECT_FALSE(ParseSeedText(nullptr).has_value());
}

// The installed binary: exit codes and the BYZDP_SEED override.
TEST(CliBinaryTest, ExitCodesAndEnvironmentSeed) {
  const fs::path dir = FreshDir("cli");
  const std::string cli = BYZDP_CLI_PATH;
  const std::string cfg = WriteConfig(dir, kMinimal).string();
  auto run = [](const std::string& cmd) {
    const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(run(cli + " run " + cfg + " --out " + (dir / "a").string()), 0);
  EXPECT_EQ(run("BYZDP_SEED=91 " + cli + " run " + cfg + " --out " + (dir / "b").string()), 0);
  EXPECT_NE(ReadFile(dir / "b" / "config.resolved").find("seed = 91\n"), std::string::npos);
  EXPECT_EQ(run("BYZDP_SEED=91 " + cli + " run " + cfg + " --seed 5 --out " +
                (dir / "c").string()),
            0);
  EXPECT_NE(ReadFile(dir / "c" / "config.resolved").find("seed = 5\n"), std::string::npos);
  EXPECT_EQ(run("BYZDP_SEED=abc " + cli + " run " + cfg), 2);
  EXPECT_EQ(run(cli + " run " + (dir / "nope.cfg").string()), 2);
  EXPECT_EQ(run(cli + " frobnicate"), 2);
  EXPECT_EQ(run(cli + " diagnose " + cfg), 2);
  // An unwritable output location is a runtime failure.
  std::ofstream(dir / "blocker") << "x";
  EXPECT_EQ(run(cli + " run " + cfg + " --out " + (dir / "blocker" / "sub").string()), 3);
}

}  // namespace
}  // namespace byzdp
