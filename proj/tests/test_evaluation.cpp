#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "crs/error.hpp"
#include "crs/evaluation.hpp"
#include "crs/experiment.hpp"
#include "crs/table_io.hpp"

using namespace crs;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.vx.steps = 100;
  c.vx.samples = 500;
  c.schedule_knots = 201;
  c.n_samples = 1000;
  c.bootstrap = 20;
  c.nfe = {3, 20};
  c.output_dir = out.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(Wasserstein, UnitCases) {
  const std::vector<double> a = {0.3, -1.2, 4.0, 2.2};
  EXPECT_EQ(wasserstein_1d(a, {4.0, 2.2, 0.3, -1.2}), 0.0);
  std::vector<double> shifted;
  for (double x : a) shifted.push_back(x + 1.75);
  EXPECT_NEAR(wasserstein_1d(a, shifted), 1.75, 1e-14);
  // Unequal sizes: {0, 1} vs {0.5} couples each half-mass to 0.5.
  EXPECT_NEAR(wasserstein_1d({0.0, 1.0}, {0.5}), 0.5, 1e-15);
  // {0, 3} vs {0, 1, 2}: quantile breakpoints at 1/3, 1/2, 2/3.
  // Pieces (width, gap): (1/3, 0), (1/6, 1), (1/6, 2), (1/3, 1).
  const double expect = std::sqrt(1.0 / 6 + 4.0 / 6 + 1.0 / 3);
  EXPECT_NEAR(wasserstein_1d({0.0, 3.0}, {0.0, 1.0, 2.0}), expect, 1e-15);
  EXPECT_THROW(wasserstein_1d({}, {1.0}), ValidationError);
}

TEST(Wasserstein, GaussianShift) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal;
  std::vector<double> a(100000), b(100000);
  for (auto& x : a) x = normal(gen);
  for (auto& x : b) x = normal(gen) + 1.0;
  EXPECT_NEAR(wasserstein_1d(a, b), 1.0, 0.02);
}

TEST(Wasserstein, SymmetricAndTriangle) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a(1 + k % 7), b(2 + k % 5), c(3 + k % 4);
    for (auto* v : {&a, &b, &c})
      for (auto& x : *v) x = u(gen);
    EXPECT_NEAR(wasserstein_1d(a, b), wasserstein_1d(b, a), 1e-12);
    EXPECT_LE(wasserstein_1d(a, c), wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-12);
  }
}

TEST(SampleError, MomentFrechetAndW2) {
  const auto two = builtin_dataset("two-point");
  Eigen::MatrixXd exact(1, 4);
  exact << -1, 1, 1, -1;
  EXPECT_EQ(sample_error(exact, two), 0.0);
  const auto grid = builtin_dataset("grid-mixture:2");
  Eigen::MatrixXd same = grid.points();
  // Sample covariance is unbiased, dataset covariance divides by N.
  const double n = 4;
  const double scale = std::sqrt((n - 1) / n);
  same = same * scale;
  EXPECT_NEAR(moment_frechet(same, grid), 0.0, 1e-12);
  EXPECT_NEAR(sample_error(same, grid), 0.0, 1e-12);
  Eigen::MatrixXd moved = same.colwise() + Eigen::Vector2d(3, 4);
  EXPECT_NEAR(moment_frechet(moved, grid), 25.0, 1e-10);
}

TEST(Bootstrap, StandardErrorScalesWithSampleSize) {
  const auto two = builtin_dataset("two-point");
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 0.1);
  auto draw = [&](int n) {
    Eigen::MatrixXd m(1, n);
    for (int i = 0; i < n; ++i) m(0, i) = (i % 2 ? 1.0 : -1.0) + normal(gen);
    return m;
  };
  const double small = bootstrap_std_error(draw(400), two, 200, 1);
  const double large = bootstrap_std_error(draw(6400), two, 200, 1);
  EXPECT_GT(small, 0.0);
  EXPECT_NEAR(small / large, 4.0, 1.6);
  const auto m = draw(100);
  EXPECT_EQ(bootstrap_std_error(m, two, 50, 9), bootstrap_std_error(m, two, 50, 9));
  EXPECT_EQ(paired_bootstrap_std_error(m, m, two, 50, 9), 0.0);
}

TEST(Modes, Counting) {
  EXPECT_EQ(count_modes({0, 1, 0}), 1u);
  EXPECT_EQ(count_modes({0, 1, 0, 2, 0, 3, 0}), 3u);
  EXPECT_EQ(count_modes({0, 1, 1, 1, 0}), 1u);
  EXPECT_EQ(count_modes({0, 1, 1, 2, 0}), 1u);
  EXPECT_EQ(count_modes({3, 2, 1}), 0u);
  EXPECT_EQ(count_modes({1, 1, 1}), 0u);
  EXPECT_EQ(count_modes({}), 0u);
}

TEST(Linspace, Endpoints) {
  const auto v = linspace(0.2, 1.0, 5);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.front(), 0.2);
  EXPECT_EQ(v.back(), 1.0);
  EXPECT_NEAR(v[2], 0.6, 1e-15);
}

TEST(DensityGrid, NormalizedAndSymmetric) {
  const auto xs = linspace(-6, 6, 2401);
  const auto g = density_grid(builtin_dataset("two-point"), {0.0, 0.5, 0.9}, xs);
  for (Eigen::Index r = 0; r < 3; ++r) {
    EXPECT_NEAR(row_integral(g, r), 1.0, 1e-6);
    for (std::size_t i = 0; i < xs.size(); ++i)
      EXPECT_NEAR(g.density(r, static_cast<Eigen::Index>(i)),
                  g.density(r, static_cast<Eigen::Index>(xs.size() - 1 - i)), 1e-14);
  }
  EXPECT_EQ(g.modes, (std::vector<std::size_t>{1, 1, 2}));
  EXPECT_THROW(density_grid(builtin_dataset("grid-mixture:2"), {0.5}, xs), ValidationError);
}

TEST(ToyFigure, ModesRiseToThree) {
  TempDir dir("crs_toy_figure");
  const auto g = cmd_toy_figure("toy3", linspace(0.0, 0.999, 200), linspace(-5, 5, 2048), dir.path());
  EXPECT_EQ(g.modes.front(), 1u);
  EXPECT_EQ(g.modes.back(), 3u);
  EXPECT_NEAR(row_integral(g, 0), 1.0, 1e-6);
  EXPECT_TRUE(fs::exists(dir.path() / "density.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "modes.csv"));
  // Too few alpha points never resolves the three modes.
  EXPECT_THROW(cmd_toy_figure("toy3", linspace(0.0, 0.5, 5), linspace(-5, 5, 256), dir.path()),
               NumericalError);
}

TEST(Config, JsonRoundTripAndHash) {
  ExperimentConfig c;
  c.nfe = {4, 8};
  c.metrics = {MetricSpec{"v_x", "", 0.7, 1.2}, MetricSpec{"v_eps", "", 0.3, 1.0}};
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
  ExperimentConfig d = c;
  d.seed = 1;
  EXPECT_NE(d.hash(), c.hash());
  auto j = c.to_json();
  j["bogus"] = 1;
  EXPECT_THROW(ExperimentConfig::from_json(j), ValidationError);
  j = c.to_json();
  j["metrics"][0]["weight"] = 0.9;
  EXPECT_THROW(ExperimentConfig::from_json(j).validate(), ValidationError);
  const auto p = provenance(c);
  EXPECT_EQ(p["config_hash"], c.hash());
  EXPECT_EQ(p["code_version"], kCodeVersion);
  EXPECT_EQ(p["seed"], 0);
}

TEST(Resolver, NamedSchedules) {
  TempDir dir("crs_resolver");
  auto cfg = small_config(dir.path());
  ScheduleResolver r(cfg, builtin_dataset("two-point"));
  const auto uni = r.alphas("uniform", 4);
  ASSERT_EQ(uni.size(), 5u);
  EXPECT_EQ(uni.front(), 1.0);
  EXPECT_EQ(uni.back(), 0.01);
  EXPECT_NEAR(uni[2], 0.505, 1e-12);
  const auto crs = r.alphas("crs", 10);
  EXPECT_EQ(crs.front(), 1.0);
  EXPECT_EQ(crs.back(), 0.01);
  for (std::size_t i = 1; i < crs.size(); ++i) EXPECT_LT(crs[i], crs[i - 1]);
  EXPECT_EQ(r.alphas("crs:v_x", 10), crs);
  EXPECT_EQ(r.alphas("linear", 3).size(), 4u);
  EXPECT_THROW(r.alphas("nonsense", 3), ValidationError);
  EXPECT_THROW(r.alphas("crs:v_bogus", 3), ValidationError);
}

TEST(Evaluate, DeterministicAndConsistentAcrossCells) {
  TempDir dir("crs_evaluate");
  auto cfg = small_config(dir.path());
  cfg.schedules = {"crs", "uniform", "crs"};
  const auto report = cmd_evaluate(cfg);
  ASSERT_EQ(report.rows.size(), 6u);
  // The same schedule listed twice sees the same noise and gives the same row.
  // Rows are schedule-major: crs x {3, 20}, uniform x {3, 20}, crs x {3, 20}.
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(report.rows[i].schedule, report.rows[i + 4].schedule);
    EXPECT_EQ(report.rows[i].nfe, report.rows[i + 4].nfe);
    EXPECT_EQ(report.rows[i].error, report.rows[i + 4].error);
    EXPECT_EQ(report.rows[i].std_error, report.rows[i + 4].std_error);
  }
  EXPECT_EQ(report.rows[2].schedule, "uniform");
  for (const auto& row : report.rows) {
    EXPECT_GT(row.std_error, 0.0);
    EXPECT_EQ(row.sampler, "ddim:0");
  }
  const auto csv = slurp(dir.path() / "results.csv");
  const auto json = nlohmann::json::parse(slurp(dir.path() / "report.json"));
  EXPECT_EQ(json["config_hash"], cfg.hash());
  EXPECT_EQ(csv.rfind("#", 0), 0u);
  cmd_evaluate(cfg);
  EXPECT_EQ(slurp(dir.path() / "results.csv"), csv);
  auto threaded = cfg;
  threaded.workers = 3;
  const auto again = cmd_evaluate(threaded, false);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(again.rows[i].error, report.rows[i].error);
}

TEST(Evaluate, ErrorFallsWithMoreSteps) {
  TempDir dir("crs_evaluate_nfe");
  auto cfg = small_config(dir.path());
  cfg.schedules = {"crs"};
  cfg.nfe = {2, 8, 64};
  const auto report = cmd_evaluate(cfg, false);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_GT(report.rows[0].error, report.rows[1].error);
  EXPECT_GT(report.rows[1].error, report.rows[2].error);
}

TEST(Sweep, ShapeAndStageTwoStaysAtWinner) {
  TempDir dir("crs_sweep");
  auto cfg = small_config(dir.path());
  cfg.metrics = {MetricSpec{"v_x", "", 0.5, 1.0}, MetricSpec{"v_eps", "", 0.5, 1.0}};
  cfg.sweep.weights = {0.7, 0.3};
  cfg.sweep.xis = {1.0, 1.2};
  cfg.nfe = {5};
  const auto report = cmd_sweep(cfg);
  ASSERT_EQ(report.rows.size(), 2u + 4u);
  std::size_t best1 = 0, best2 = 0;
  double winner = -1;
  for (const auto& row : report.rows) {
    EXPECT_NEAR(row.weight_first + row.weight_second, 1.0, 1e-12);
    if (row.stage == 1) {
      EXPECT_EQ(row.xi_first, 1.0);
      EXPECT_EQ(row.xi_second, 1.0);
      if (row.best) {
        ++best1;
        winner = row.weight_first;
      }
    } else {
      best2 += row.best;
    }
  }
  EXPECT_EQ(best1, 1u);
  EXPECT_EQ(best2, 1u);
  for (const auto& row : report.rows)
    if (row.stage == 2) EXPECT_EQ(row.weight_first, winner);
  EXPECT_TRUE(fs::exists(dir.path() / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "sweep.json"));
}

TEST(Sweep, SingleMetricGivesOneCellStages) {
  TempDir dir("crs_sweep_single");
  auto cfg = small_config(dir.path());
  cfg.nfe = {4};
  const auto report = cmd_sweep(cfg, false);
  ASSERT_EQ(report.rows.size(), 1u + cfg.sweep.xis.size());
  EXPECT_EQ(report.rows[0].stage, 1);
  EXPECT_EQ(report.rows[0].weight_first, 1.0);
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    EXPECT_EQ(report.rows[i].stage, 2);
    EXPECT_EQ(report.rows[i].xi_first, cfg.sweep.xis[i - 1]);
  }
}

TEST(TrainSchedule, WritesRefreshes) {
  TempDir dir("crs_train");
  auto cfg = small_config(dir.path());
  cfg.adaptive.warmup = 10;
  cfg.adaptive.refresh_interval = 10;
  cfg.adaptive.batch_size = 16;
  cfg.adaptive.schedule_knots = 101;
  cfg.train_steps = 40;
  const auto s = cmd_train_schedule(cfg, dir.path());
  EXPECT_EQ(s.alpha(0.0), 1.0);
  EXPECT_TRUE(fs::exists(dir.path() / "schedule.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "estimator.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "refresh_log.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "schedules" / "step_20.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "schedules" / "step_40.csv"));
}

TEST(Evaluate, QuotesScheduleNamesWithCommas) {
  EXPECT_EQ(io::csv_field("crs"), "crs");
  EXPECT_EQ(io::csv_field("edm:0.002,80,7"), "\"edm:0.002,80,7\"");
  EXPECT_EQ(io::csv_field("a\"b"), "\"a\"\"b\"");
  TempDir dir("crs_evaluate_quote");
  auto cfg = small_config(dir.path());
  cfg.schedules = {"edm:0.002,80,7"};
  cfg.nfe = {4};
  cmd_evaluate(cfg);
  const auto csv = slurp(dir.path() / "results.csv");
  EXPECT_NE(csv.find("\n\"edm:0.002,80,7\",ddim:0,4,"), std::string::npos) << csv;
}
