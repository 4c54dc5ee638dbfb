#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "crs/table_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "crs_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(CRS_CLI_PATH) + " " + args + " > " +
                          (kWork / "stdout.txt").string() + " 2> " + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string in_work(const std::string& name) { return (kWork / name).string(); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  static void TearDownTestSuite() { fs::remove_all(kWork); }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("compute-rate"), 2);
  EXPECT_EQ(run("compute-rate -m v_bogus --dataset toy3 -o " + in_work("x.csv")), 2);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("v_bogus"), std::string::npos);
  EXPECT_EQ(run("evaluate --dataset nowhere"), 2);
  EXPECT_EQ(run("evaluate --metrics v_x v_eps --weights 0.6 0.6"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, ComputeRateThenSolveSchedule) {
  const auto rate = in_work("rate.csv");
  ASSERT_EQ(run("compute-rate -m v_x --dataset toy3 -o " + rate), 0);
  const auto table = crs::io::load_rate(rate);
  EXPECT_EQ(table.size(), 1001u);
  EXPECT_TRUE(fs::exists(rate + ".meta.json"));

  const auto sched = in_work("schedule.csv");
  ASSERT_EQ(run("solve-schedule -r " + rate + " -o " + sched), 0);
  const auto s = crs::io::load_schedule(sched);
  EXPECT_EQ(s.alpha(0.0), 1.0);
  EXPECT_EQ(s.alpha(1.0), 0.01);
  EXPECT_EQ(s.size(), 1001u);

  EXPECT_EQ(run("solve-schedule -r " + rate + " " + rate + " -w 0.5 0.6 -o " + sched), 2);
  EXPECT_EQ(run("solve-schedule -r " + rate + " " + rate + " -w 0.5 0.5 -o " + in_work("s2.csv")), 0);
  // Two copies of one table at weights summing to 1 solve to the same schedule.
  EXPECT_EQ(slurp(in_work("s2.csv")), slurp(sched));
}

TEST_F(Cli, EvaluateIsByteIdenticalOnRerun) {
  const std::string args = "evaluate --dataset two-point --vx-steps 100 --vx-samples 500 -n 500 "
                           "--nfe 4 16 --schedules crs uniform linear --out-dir " + in_work("eval");
  ASSERT_EQ(run(args), 0);
  const auto first = slurp(kWork / "eval" / "results.csv");
  const auto report = slurp(kWork / "eval" / "report.json");
  ASSERT_FALSE(first.empty());
  ASSERT_EQ(run(args), 0);
  EXPECT_EQ(slurp(kWork / "eval" / "results.csv"), first);
  EXPECT_EQ(slurp(kWork / "eval" / "report.json"), report);
  ASSERT_EQ(run(args + " --workers 2"), 0);
  EXPECT_EQ(slurp(kWork / "eval" / "results.csv"), first);
}

TEST_F(Cli, SampleAndConfigFile) {
  const auto cfg = in_work("config.json");
  {
    std::ofstream f(cfg);
    f << R"({"dataset": "toy3", "n_samples": 64, "vx": {"T": 50, "S": 200}})";
  }
  const auto out = in_work("samples.csv");
  ASSERT_EQ(run("sample --config " + cfg + " -s uniform --steps 8 -o " + out), 0);
  const auto text = slurp(out);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  EXPECT_GE(lines, 64u);
  ASSERT_EQ(run("sample --config " + cfg + " -s uniform --steps 8 -o " + in_work("again.csv")), 0);
  EXPECT_EQ(slurp(in_work("again.csv")), text);
  {
    std::ofstream f(cfg);
    f << R"({"dataset": "toy3", "unknown_key": 1})";
  }
  EXPECT_EQ(run("sample --config " + cfg + " -o " + out), 2);
  {
    std::ofstream f(cfg);
    f << "{ not json";
  }
  EXPECT_EQ(run("sample --config " + cfg + " -o " + out), 2);
}

TEST_F(Cli, ToyFigure) {
  ASSERT_EQ(run("toy-figure --out-dir " + in_work("toy")), 0);
  EXPECT_NE(slurp(kWork / "stdout.txt").find("modes 1 -> 3"), std::string::npos);
  EXPECT_TRUE(fs::exists(kWork / "toy" / "density.csv"));
  EXPECT_EQ(run("toy-figure --alpha-max 1 --out-dir " + in_work("toy")), 2);
}

TEST_F(Cli, TrainSchedule) {
  const auto cfg = in_work("train.json");
  {
    std::ofstream f(cfg);
    f << R"({"dataset": "toy3", "adaptive": {"warmup": 10, "refresh_interval": 10, "batch_size": 8}})";
  }
  ASSERT_EQ(run("train-schedule --config " + cfg + " --steps 30 --out-dir " + in_work("train")), 0);
  EXPECT_TRUE(fs::exists(kWork / "train" / "schedule.csv"));
  EXPECT_TRUE(fs::exists(kWork / "train" / "schedules" / "step_20.csv"));
}
