#include <gtest/gtest.h>

#include <algorithm>

#include "cli_runner.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace fetalscreen {
namespace {

using testing::CliResult;
using testing::run_cli;
using testing::slurp;
using testing::snapshot;
using testing::TempDir;
using json = nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::string> phantom_args(const TempDir& dir, const std::string& name, int studies,
                                      std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {"--out", dir.str(name), "--seed", "5", "phantom", "--studies", std::to_string(studies),
                                   "--frames-per-view", "1", "--cine-frames", "3"};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void expect_ok(const CliResult& r) { EXPECT_EQ(r.code, 0) << r.err; }

TEST(Cli, ArgumentErrorsExitTwo) {
  TempDir dir("cli");
  EXPECT_EQ(run_cli({"--out", dir.str("p"), "phantom", "--studies", "0"}).code, 2);
  EXPECT_EQ(run_cli({"phantom", "--studies", "3"}).code, 2);
  EXPECT_EQ(run_cli({"--out", dir.str("p")}).code, 2);
  EXPECT_EQ(run_cli({"--out", dir.str("p"), "nonsense"}).code, 2);
  EXPECT_EQ(run_cli({"--out", dir.str("p"), "phantom", "--studies", "3", "--noise", "2"}).code, 2);
  EXPECT_FALSE(fs::exists(dir / "p"));
}

TEST(Cli, VersionAndHelp) {
  const auto v = run_cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out, std::string(cli::version()) + "\n");
  const auto h = run_cli({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("phantom"), std::string::npos);
}

TEST(Cli, PhantomWritesManifestStudiesAndRunRecord) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 20)));
  const auto manifest = read_json(dir / "p/manifest.json");
  ASSERT_EQ(manifest.size(), 20u);
  int study_dirs = 0;
  for (const auto& e : fs::directory_iterator(dir / "p")) study_dirs += e.is_directory();
  EXPECT_EQ(study_dirs, 20);
  for (const auto& s : manifest)
    for (const auto& f : s.at("frames")) EXPECT_TRUE(fs::exists(dir / "p" / f.at("image").get<std::string>()));

  const auto run = read_json(dir / "p/run.json");
  EXPECT_EQ(run.at("command"), "phantom");
  EXPECT_EQ(run.at("config").at("studies"), "20");
  EXPECT_EQ(run.at("config").at("seed"), "5");
}

TEST(Cli, MissingInputIsIoFailure) {
  TempDir dir("cli");
  EXPECT_EQ(run_cli({"--out", dir.str("m"), "measure", "--manifest", dir.str("nope.json")}).code, 3);
}

TEST(Cli, MeasureReportsEveryStudy) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 20)));
  expect_ok(run_cli({"--out", dir.str("m"), "measure", "--manifest", dir.str("p/manifest.json")}));
  int reports = 0;
  for (const auto& e : fs::directory_iterator(dir / "m/reports")) reports += e.path().extension() == ".json";
  EXPECT_EQ(reports, 20);
  const auto summary = slurp(dir / "m/summary.csv");
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 21);
  EXPECT_EQ(summary.find("error"), std::string::npos);
}

TEST(Cli, MeasureWithoutMasksNamesEachStudy) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 3, {"--no-masks"})));
  const auto r = run_cli({"--out", dir.str("m"), "measure", "--manifest", dir.str("p/manifest.json")});
  expect_ok(r);
  for (const char* id : {"S0001", "S0002", "S0003"}) EXPECT_NE(r.err.find(std::string(id) + ": no masks"), std::string::npos);
}

TEST(Cli, CorruptMaskFlagsOnlyItsStudy) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 3)));
  std::ofstream(dir / "p/S0002/a4c_0_axis.fsmask") << "junk";
  expect_ok(run_cli({"--out", dir.str("m"), "measure", "--manifest", dir.str("p/manifest.json")}));
  std::istringstream rows(slurp(dir / "m/summary.csv"));
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    const bool bad = line.find("MALFORMED_FILE") != std::string::npos;
    EXPECT_EQ(bad, line.starts_with("S0002")) << line;
  }
}

TEST(Cli, EvaluateRejectsMismatchedStudies) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 3)));
  expect_ok(run_cli({"--out", dir.str("p2"), "--seed", "9", "phantom", "--studies", "2", "--frames-per-view", "1",
                     "--cine-frames", "3"}));
  expect_ok(run_cli({"--out", dir.str("t"), "train", "--manifest", dir.str("p/manifest.json"), "--epochs", "2"}));
  expect_ok(run_cli({"--out", dir.str("pr"), "predict", "--manifest", dir.str("p/manifest.json"), "--models", dir.str("t")}));
  const auto r = run_cli({"--out", dir.str("ev"), "evaluate", "--manifest", dir.str("p2/manifest.json"), "--predictions",
                          dir.str("pr/view_predictions.csv")});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("MISSING_PREDICTIONS"), std::string::npos);
  EXPECT_NE(r.err.find("S0003"), std::string::npos);
}

TEST(Cli, LesionEvaluationSkipsStudiesOutsideTheTask) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 9, {"--mix", "0.34,0.33,0.33"})));
  expect_ok(run_cli({"--out", dir.str("t"), "train", "--manifest", dir.str("p/manifest.json"), "--task", "hlhs",
                     "--epochs", "2"}));
  expect_ok(run_cli({"--out", dir.str("pr"), "predict", "--manifest", dir.str("p/manifest.json"), "--models", dir.str("t")}));
  expect_ok(run_cli({"--out", dir.str("ev"), "evaluate", "--manifest", dir.str("p/manifest.json"), "--predictions",
                     dir.str("pr/lesion_predictions.csv")}));
  EXPECT_NE(slurp(dir / "p/manifest.json").find("\"tof\""), std::string::npos);
  const auto metrics = read_json(dir / "ev/metrics.json");
  EXPECT_TRUE(metrics.at("predictions").at("tasks").contains("hlhs"));
}

TEST(Cli, DiagnoseWithNoUsableViewIsEmptySelection) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 4)));
  expect_ok(run_cli({"--out", dir.str("t"), "train", "--manifest", dir.str("p/manifest.json"), "--task", "hlhs",
                     "--epochs", "2"}));
  expect_ok(run_cli({"--out", dir.str("pr"), "predict", "--manifest", dir.str("p/manifest.json"), "--models", dir.str("t")}));
  const auto r = run_cli({"--out", dir.str("d"), "diagnose", "--manifest", dir.str("p/manifest.json"), "--predictions",
                          dir.str("pr/lesion_predictions.csv"), "--c-stats", "0.6,0.5,0.6,0.55,0.4"});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("EMPTY_SELECTION"), std::string::npos);

  const auto ok = run_cli({"--out", dir.str("d2"), "diagnose", "--manifest", dir.str("p/manifest.json"), "--predictions",
                           dir.str("pr/lesion_predictions.csv"), "--c-stats", "0.8,0.89,0.84,0.69,0.51"});
  expect_ok(ok);
  const auto report = read_json(dir / "d2/diagnosis_hlhs.json");
  EXPECT_EQ(report.at("selected_views"), json({"3vt", "3vv", "a5c", "a4c"}));
}

TEST(Cli, ZeroNoiseViewPipelineIsNearPerfect) {
  TempDir dir("cli");
  expect_ok(run_cli({"--out", dir.str("p"), "--seed", "11", "phantom", "--studies", "30", "--frames-per-view", "2",
                     "--cine-frames", "4"}));
  expect_ok(run_cli({"--out", dir.str("t"), "--seed", "11", "train", "--manifest", dir.str("p/manifest.json"),
                     "--epochs", "60"}));
  expect_ok(run_cli({"--out", dir.str("pr"), "predict", "--manifest", dir.str("p/manifest.json"), "--models", dir.str("t"),
                     "--split", dir.str("t/split.json"), "--subset", "test"}));
  expect_ok(run_cli({"--out", dir.str("ev"), "evaluate", "--manifest", dir.str("p/manifest.json"), "--predictions",
                     dir.str("pr/view_predictions.csv"), "--split", dir.str("t/split.json"), "--subset", "test"}));
  const auto metrics = read_json(dir / "ev/metrics.json");
  EXPECT_GE(metrics.at("predictions").at("f_score_macro").at("value").get<double>(), 0.99);

  expect_ok(run_cli({"--out", dir.str("r"), "report", "--in", dir.str("ev")}));
  EXPECT_TRUE(fs::exists(dir / "r/view_f_scores.csv"));
}

TEST(Cli, RerunIsByteIdentical) {
  TempDir dir("cli");
  const auto pipeline = [&] {
    expect_ok(run_cli(phantom_args(dir, "p", 6)));
    expect_ok(run_cli({"--out", dir.str("m"), "measure", "--manifest", dir.str("p/manifest.json")}));
    expect_ok(run_cli({"--out", dir.str("t"), "--seed", "3", "train", "--manifest", dir.str("p/manifest.json"),
                       "--epochs", "3"}));
    expect_ok(run_cli({"--out", dir.str("pr"), "predict", "--manifest", dir.str("p/manifest.json"), "--models",
                       dir.str("t")}));
    return snapshot(dir.path());
  };
  const auto first = pipeline();
  for (const char* d : {"p", "m", "t", "pr"}) fs::remove_all(dir / d);
  const auto second = pipeline();
  EXPECT_GT(first.size(), 50u);
  EXPECT_TRUE(first == second);
}

TEST(Cli, ThreadCountDoesNotChangeOutputs) {
  TempDir dir("cli");
  expect_ok(run_cli(phantom_args(dir, "p", 4)));
  for (const char* threads : {"1", "3"}) {
    const std::string out = dir.str(std::string("t") + threads);
    expect_ok(run_cli({"--out", out, "--threads", threads, "train", "--manifest", dir.str("p/manifest.json"), "--epochs",
                       "3"}));
  }
  EXPECT_EQ(slurp(dir / "t1/models/view.fsmodel"), slurp(dir / "t3/models/view.fsmodel"));
}

}  // namespace
}  // namespace fetalscreen
