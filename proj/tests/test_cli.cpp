#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mad/analysis.hpp"
#include "mad/cli.hpp"
#include "mad/csv.hpp"
#include "mad/model_io.hpp"
#include "mad/nnscore.hpp"
#include "mad/synthdata.hpp"
#include "test_util.hpp"

using namespace mad;
using namespace mad::testing;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "mad");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(args.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Data rows of a mad CSV, without the config comment line.
std::string data_rows(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out += line + "\n";
  }
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SampleFig1WritesArtifacts) {
  ASSERT_EQ(run({"model", "--kind", "fig1_line_mixture", "--out", path("fig1.json")}), 0);
  ASSERT_EQ(run({"sample", "--model", path("fig1.json"), "--mode", "mad", "--a", "1", "--b", "1", "--p", "1",
                 "--delta", "1e-4", "--n", "64", "--seed", "7", "--trajectories", "2", "--svg", "--out-dir",
                 path("out")}),
            0);
  for (const char* f : {"endpoints.csv", "summary.json", "endpoints.svg", "trajectory_0000.csv", "trajectory_0001.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
  const auto summary = read_json_file(path("out/summary.json"));
  EXPECT_EQ(summary.at("schema_version"), 1);
  EXPECT_EQ(summary.at("config").at("mode"), "mad");
  EXPECT_EQ(summary.at("summary").at("basins").size(), 5u);
  EXPECT_EQ(read_points_csv(path("out/endpoints.csv")).size(), 64u);
}

TEST_F(CliTest, ZeroBMatchesStandard) {
  ASSERT_EQ(run({"model", "--out", path("fig1.json")}), 0);
  ASSERT_EQ(run({"sample", "--model", path("fig1.json"), "--mode", "standard", "--b", "0", "--n", "16", "--out-dir",
                 path("std")}),
            0);
  ASSERT_EQ(run({"sample", "--model", path("fig1.json"), "--mode", "mad", "--b", "0", "--n", "16", "--out-dir",
                 path("mad")}),
            0);
  // the comment line carries the mode, the data must not differ
  EXPECT_EQ(data_rows(dir_ / "std" / "endpoints.csv"), data_rows(dir_ / "mad" / "endpoints.csv"));
}

TEST_F(CliTest, RerunIsByteIdentical) {
  ASSERT_EQ(run({"model", "--out", path("fig1.json")}), 0);
  for (const char* out : {"r1", "r2"}) {
    ASSERT_EQ(run({"sample", "--model", path("fig1.json"), "--n", "8", "--trajectories", "1", "--out-dir", path(out)}),
              0);
  }
  for (const char* f : {"endpoints.csv", "summary.json", "trajectory_0000.csv"}) {
    EXPECT_EQ(slurp(dir_ / "r1" / f), slurp(dir_ / "r2" / f)) << f;
  }
}

TEST_F(CliTest, TrainThenSampleFromCheckpoint) {
  const std::string spec = path("spec.json");
  ASSERT_EQ(run({"dataset", "--kind", "manifold_noisy", "--manifold", "line", "--count", "500", "--out",
                 path("data.csv"), "--spec-out", spec}),
            0);
  ASSERT_EQ(run({"train", "--dataset-spec", spec, "--iterations", "50", "--batch", "32", "--hidden", "16,16", "--seed",
                 "3", "--out", path("a.json"), "--log", path("log.csv")}),
            0);
  ASSERT_EQ(run({"train", "--dataset-spec", spec, "--iterations", "50", "--batch", "32", "--hidden", "16,16", "--seed",
                 "3", "--out", path("b.json"), "--log", path("log2.csv")}),
            0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_EQ(data_rows(path("log.csv")), data_rows(path("log2.csv")));
  ASSERT_EQ(run({"sample", "--checkpoint", path("a.json"), "--dataset-spec", spec, "--delta", "1e-3", "--n", "8",
                 "--out-dir", path("s")}),
            0);
  const auto summary = read_json_file(path("s/summary.json"));
  EXPECT_TRUE(summary.at("summary").contains("manifold_rms"));
  // training from the CSV gives the same net as from the spec
  ASSERT_EQ(run({"train", "--data", path("data.csv"), "--iterations", "50", "--batch", "32", "--hidden", "16,16",
                 "--seed", "3", "--out", path("c.json"), "--log", path("log3.csv")}),
            0);
  EXPECT_EQ(load_checkpoint(path("c.json")).net->parameters(), load_checkpoint(path("a.json")).net->parameters());
}

TEST_F(CliTest, ZeroIterationsKeepsInitialization) {
  ASSERT_EQ(run({"dataset", "--count", "100", "--out", path("data.csv")}), 0);
  ASSERT_EQ(run({"train", "--data", path("data.csv"), "--iterations", "0", "--hidden", "8", "--seed", "21", "--out",
                 path("ck.json"), "--log", path("log.csv")}),
            0);
  const auto ck = load_checkpoint(path("ck.json"));
  EXPECT_EQ(ck.net->parameters(), MlpDenoiser(ck.net->shape(), 21).parameters());
}

TEST_F(CliTest, SweepSingleCellMatchesSample) {
  ASSERT_EQ(run({"model", "--out", path("fig1.json")}), 0);
  ASSERT_EQ(run({"sweep", "--model", path("fig1.json"), "--a-grid", "1", "--b-grid", "1", "--p-grid", "1", "--n",
                 "32", "--out-dir", path("sw")}),
            0);
  ASSERT_EQ(run({"sample", "--model", path("fig1.json"), "--n", "32", "--out-dir", path("sa")}), 0);
  const auto sweep = read_json_file(path("sw/sweep.json"));
  ASSERT_EQ(sweep.at("rows").size(), 2u);
  EXPECT_EQ(sweep.at("rows")[0].at("mode"), "standard");
  auto expected = read_json_file(path("sa/summary.json")).at("summary");
  expected.erase("m_min");
  expected.erase("m_max");
  EXPECT_EQ(sweep.at("rows")[1].at("summary"), expected);
  EXPECT_TRUE(fs::exists(dir_ / "sw" / "sweep.csv"));
}

TEST_F(CliTest, SweepFig2aBeatsBaseline) {
  ASSERT_EQ(run({"model", "--kind", "fig2a_tilted", "--data-seed", "7", "--out", path("fig2a.json")}), 0);
  ASSERT_EQ(run({"sweep", "--model", path("fig2a.json"), "--a-grid", "1", "--b-grid", "1.1", "--p-grid", "1.3", "--n",
                 "128", "--derivative", "analytic", "--out-dir", path("sw")}),
            0);
  const auto rows = read_json_file(path("sw/sweep.json")).at("rows");
  const double base = rows[0].at("summary").at("axis").at("off_axis_ms");
  const double mad = rows[1].at("summary").at("axis").at("off_axis_ms");
  EXPECT_LT(mad, base);
}

TEST_F(CliTest, SweepRecordsFailedCells) {
  const std::string model = path("dirac.json");
  save_model(model, DiracMixture({{1.0, vec({0.0, 0.0})}}));
  ASSERT_EQ(run({"sweep", "--model", model, "--a-grid", "0.5", "--b-grid", "1,20", "--p-grid", "1", "--n", "4",
                 "--derivative", "analytic", "--out-dir", path("sw")}),
            0);
  const auto rows = read_json_file(path("sw/sweep.json")).at("rows");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].at("status"), "ok");
  EXPECT_EQ(rows[2].at("status"), "failed");
  EXPECT_EQ(rows[2].at("error").at("message"), "correction singular");
  EXPECT_EQ(rows[2].at("error").at("code"), "numerical_failure");
}

TEST_F(CliTest, ValidateAndPerturbation) {
  EXPECT_EQ(run({"validate", "--out", path("report.json")}), 0);
  const auto report = read_json_file(path("report.json"));
  for (const auto& c : report.at("checks")) EXPECT_TRUE(c.contains("tolerance"));
  EXPECT_EQ(run({"validate", "--perturb", "1e-3"}), 2);
  ::setenv("MAD_VALIDATE_PERTURB", "1e-3", 1);
  EXPECT_EQ(run({"validate"}), 2);
  ::unsetenv("MAD_VALIDATE_PERTURB");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"sample", "--model", path("missing.json")}), 4);
  EXPECT_EQ(run({"sample", "--bogus-flag"}), 4);
  EXPECT_EQ(run({"model", "--kind", "nope", "--out", path("x.json")}), 4);
  ASSERT_EQ(run({"model", "--out", path("fig1.json")}), 0);
  EXPECT_EQ(run({"sample", "--model", path("fig1.json"), "--a", "-1"}), 4);
  // correction singular on a Dirac target
  const std::string model = path("dirac.json");
  save_model(model, DiracMixture({{1.0, vec({0.0})}}));
  EXPECT_EQ(run({"sample", "--model", model, "--a", "0.5", "--b", "20", "--p", "1", "--derivative", "analytic", "--n",
                 "2", "--out-dir", path("o")}),
            3);
}

TEST_F(CliTest, ErrorJsonShape) {
  ::testing::internal::CaptureStderr();
  const int code = run({"sample", "--model", path("missing.json")});
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(code, 4);
  const auto j = nlohmann::json::parse(err);
  EXPECT_EQ(j.at("code"), "bad_input");
  EXPECT_TRUE(j.contains("message"));
  EXPECT_TRUE(j.contains("context"));
}
