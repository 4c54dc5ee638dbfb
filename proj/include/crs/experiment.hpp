#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "crs/adaptive_training.hpp"
#include "crs/dataset.hpp"
#include "crs/evaluation.hpp"
#include "crs/noise_schedule.hpp"
#include "crs/rate_metrics.hpp"
#include "crs/schedule_solver.hpp"

namespace crs {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Written into every report header: the quality metric is the desk-scale
/// stand-in, not image FID.
inline constexpr const char* kProtocolNote =
    "error = exact 1-D W2 to the dataset (d = 1) or Frechet distance between moments (d > 1)";

/// One rate function in a combination: computed from `name` ("v_x", "v_eps",
/// "v_klub", "v_fid") or read from `path` when set.
struct MetricSpec {
  std::string name = "v_x";
  std::string path;
  double weight = 1.0;
  double xi = 1.0;
};

/// Two-stage tuning grid: stage 1 varies the weight of the first metric
/// (second gets 1 - w) with all exponents 1; stage 2 varies both exponents
/// at the stage-1 winner.
struct SweepGrid {
  std::vector<double> weights = {0.9, 0.7, 0.5, 0.3, 0.1};
  std::vector<double> xis = {0.5, 1.0, 1.2, 1.4};

  void validate() const;
};

struct ExperimentConfig {
  std::string dataset = "two-point";
  std::vector<MetricSpec> metrics = {MetricSpec{}};
  std::vector<std::string> schedules = {"crs", "uniform"};
  std::string sampler = "ddim:0";
  std::vector<std::size_t> nfe = {5, 10, 100};
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  std::string output_dir = "crs_out";
  double alpha_max = 1.0;
  double alpha_min = 0.01;
  std::size_t schedule_knots = 1001;
  VxConfig vx;
  std::size_t fid_steps = 1000;
  std::size_t fid_samples = 10000;
  double fid_power = 1.0;
  std::size_t bootstrap = 200;
  std::size_t workers = 1;
  SweepGrid sweep;
  AdaptiveConfig adaptive;
  std::size_t train_steps = 50000;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// FNV-1a of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;
};

/// Provenance block shared by all reports and sidecars.
nlohmann::json provenance(const ExperimentConfig& config);

/// Rate for a metric name on `dataset` with the config's simulation settings.
RateEstimate compute_rate(const std::string& metric, const PointDataset& dataset,
                          const ExperimentConfig& config);

/// Writes the rate table (format by extension) and "<path>.meta.json" with
/// config, seed and per-knot standard errors.
RateEstimate cmd_compute_rate(const ExperimentConfig& config, const std::string& metric,
                              const std::filesystem::path& out);

/// Combines the rate files with the given weights/exponents and solves the
/// schedule over [alpha_min, alpha_max].
NoiseSchedule cmd_solve_schedule(const std::vector<std::filesystem::path>& rate_files,
                                 const std::vector<double>& weights, const std::vector<double>& xis,
                                 double alpha_max, double alpha_min, std::size_t n_knots,
                                 const std::filesystem::path& out);

/// Resolves schedule names to sampling grids. Rates are computed lazily and
/// cached, so repeated lookups reuse them.
class ScheduleResolver {
 public:
  ScheduleResolver(const ExperimentConfig& config, PointDataset dataset);

  /// "crs" (configured metrics), "crs:<metric>", "uniform", zoo names, or
  /// "file:<path>". Returns n_steps + 1 decreasing alphas.
  std::vector<double> alphas(const std::string& name, std::size_t n_steps);
  /// Continuous schedule behind a name (zoo sampling names excluded).
  NoiseSchedule schedule(const std::string& name);
  /// Schedule solved from an explicit metric combination.
  NoiseSchedule combined(const std::vector<MetricSpec>& metrics);

  const RateTable& rate(const MetricSpec& metric);
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  ExperimentConfig config_;
  PointDataset dataset_;
  std::map<std::string, RateTable> rates_;
  std::vector<std::string> warnings_;
};

struct EvalRow {
  std::string schedule;
  std::string sampler;
  std::size_t nfe = 0;
  double error = 0.0;
  double std_error = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::string> warnings;
  nlohmann::json header;
};

/// Samples with every (schedule, NFE) pair and scores against the dataset.
/// All cells at one NFE share the same initial noise. Writes results.csv and
/// report.json into the output directory unless `write` is false.
EvalReport cmd_evaluate(const ExperimentConfig& config, bool write = true);

struct SweepRow {
  std::size_t nfe = 0;
  int stage = 1;
  double weight_first = 0.0;
  double weight_second = 0.0;
  double xi_first = 1.0;
  double xi_second = 1.0;
  double error = 0.0;
  double std_error = 0.0;
  bool best = false;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  nlohmann::json header;
};

/// Samples with one named schedule and writes them as CSV (one row per
/// sample).
Eigen::MatrixXd cmd_sample(const ExperimentConfig& config, const std::string& schedule,
                           std::size_t nfe, const std::filesystem::path& out);

/// Two-stage (weight, exponent) tuning per NFE over the first two metrics of
/// the config. With a single metric stage 1 is one cell and stage 2 varies
/// its exponent only.
SweepReport cmd_sweep(const ExperimentConfig& config, bool write = true);

/// Density of a 1-D dataset on an (alpha, x) grid; writes density.csv and
/// modes.csv. For "toy3" the mode count must rise from 1 to 3.
DensityGrid cmd_toy_figure(const std::string& dataset_name, const std::vector<double>& alphas,
                           const std::vector<double>& xs, const std::filesystem::path& out_dir);

/// Online schedule adaptation with the analytic predictor; each refresh is
/// written to out_dir/schedules/step_<n>.csv and logged in refresh_log.csv.
NoiseSchedule cmd_train_schedule(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

}  // namespace crs
