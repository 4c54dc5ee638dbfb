#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crs/error.hpp"
#include "crs/evaluation.hpp"
#include "crs/experiment.hpp"
#include "crs/table_io.hpp"

namespace {

// Flags shared by the config-driven subcommands. Each one overrides the
// corresponding config field when given.
struct Overrides {
  std::string config_path;
  std::optional<std::string> dataset, sampler, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_samples, workers, vx_steps, vx_samples;
  std::vector<std::size_t> nfe;
  std::vector<std::string> schedules, metrics;
  std::vector<double> weights, xis;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--dataset", dataset, "Built-in dataset name or CSV path");
    cmd->add_option("--sampler", sampler, "ddim:<eta> or dpmpp2m");
    cmd->add_option("--out-dir", out_dir, "Output directory");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("-n,--n-samples", n_samples, "Number of samples");
    cmd->add_option("--workers", workers, "Worker threads");
    cmd->add_option("--vx-steps", vx_steps, "Forward steps T for v_x/v_eps/v_klub");
    cmd->add_option("--vx-samples", vx_samples, "Trajectories S for v_x/v_eps/v_klub");
    cmd->add_option("--nfe", nfe, "NFE list");
    cmd->add_option("--schedules", schedules, "Schedule names");
    cmd->add_option("--metrics", metrics, "Metric names or rate files combined by 'crs'");
    cmd->add_option("--weights", weights, "Metric weights (same order as --metrics)");
    cmd->add_option("--xis", xis, "Metric exponents (same order as --metrics)");
  }

  crs::ExperimentConfig resolve() const {
    nlohmann::json j = config_path.empty() ? nlohmann::json::object()
                                           : nlohmann::json::parse(crs::io::read_file(config_path));
    auto cfg = crs::ExperimentConfig::from_json(j);
    if (dataset) cfg.dataset = *dataset;
    if (sampler) cfg.sampler = *sampler;
    if (out_dir) cfg.output_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    if (n_samples) cfg.n_samples = *n_samples;
    if (workers) cfg.workers = cfg.vx.workers = *workers;
    if (vx_steps) cfg.vx.steps = *vx_steps;
    if (vx_samples) cfg.vx.samples = *vx_samples;
    if (!nfe.empty()) cfg.nfe = nfe;
    if (!schedules.empty()) cfg.schedules = schedules;
    if (!metrics.empty()) {
      cfg.metrics.clear();
      for (const auto& m : metrics) {
        crs::MetricSpec spec;
        if (m.find('.') != std::string::npos || m.find('/') != std::string::npos)
          spec.path = m;
        else
          spec.name = m;
        cfg.metrics.push_back(spec);
      }
      crs::detail::require(cfg.metrics.size() == 1 || !weights.empty(),
                           "--weights is required when combining several metrics");
    }
    if (!weights.empty()) {
      crs::detail::require(weights.size() == cfg.metrics.size(), "one weight per metric");
      for (std::size_t i = 0; i < weights.size(); ++i) cfg.metrics[i].weight = weights[i];
    }
    if (!xis.empty()) {
      crs::detail::require(xis.size() == cfg.metrics.size(), "one exponent per metric");
      for (std::size_t i = 0; i < xis.size(); ++i) cfg.metrics[i].xi = xis[i];
    }
    cfg.validate();
    return cfg;
  }
};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant-rate noise schedules for diffusion models"};
  app.require_subcommand(1);

  // compute-rate
  Overrides rate_opts;
  std::string metric, rate_out = "rate.csv";
  auto* rate_cmd = app.add_subcommand("compute-rate", "Estimate a rate function v(alpha)");
  rate_opts.attach(rate_cmd);
  rate_cmd->add_option("-m,--metric", metric, "v_x, v_eps, v_klub or v_fid")->required();
  rate_cmd->add_option("-o,--out", rate_out, "Output table (.csv or .json)");

  // solve-schedule
  std::vector<std::string> rate_files;
  std::vector<double> solve_weights, solve_xis;
  double alpha_max = 1.0, alpha_min = 0.01;
  std::size_t knots = 1001;
  std::string schedule_out = "schedule.csv";
  auto* solve_cmd = app.add_subcommand("solve-schedule", "Solve a schedule from rate tables");
  solve_cmd->add_option("-r,--rates", rate_files, "Rate table files")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("-w,--weights", solve_weights, "Weights, summing to 1");
  solve_cmd->add_option("-x,--xis", solve_xis, "Exponents");
  solve_cmd->add_option("--alpha-max", alpha_max, "Largest alpha");
  solve_cmd->add_option("--alpha-min", alpha_min, "Smallest alpha");
  solve_cmd->add_option("--knots", knots, "Number of time knots");
  solve_cmd->add_option("-o,--out", schedule_out, "Output schedule (.csv or .json)");

  // sample
  Overrides sample_opts;
  std::string sample_schedule = "crs", samples_out = "samples.csv";
  std::size_t sample_nfe = 10;
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples with one schedule");
  sample_opts.attach(sample_cmd);
  sample_cmd->add_option("-s,--schedule", sample_schedule, "Schedule name");
  sample_cmd->add_option("--steps", sample_nfe, "Number of sampler steps (NFE)");
  sample_cmd->add_option("-o,--out", samples_out, "Output CSV");

  // evaluate
  Overrides eval_opts;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score schedules x NFE against the dataset");
  eval_opts.attach(eval_cmd);

  // sweep
  Overrides sweep_opts;
  std::vector<double> sweep_weights, sweep_xis;
  auto* sweep_cmd = app.add_subcommand("sweep", "Two-stage weight / exponent tuning");
  sweep_opts.attach(sweep_cmd);
  sweep_cmd->add_option("--grid-weights", sweep_weights, "Stage-1 weights of the first metric");
  sweep_cmd->add_option("--grid-xis", sweep_xis, "Stage-2 exponent grid");

  // toy-figure
  std::string toy_dataset = "toy3", toy_out = "toy_figure";
  std::size_t alpha_points = 200, x_points = 2048;
  double toy_alpha_max = 0.999, x_lo = -5.0, x_hi = 5.0;
  auto* toy_cmd = app.add_subcommand("toy-figure", "Diffused density on an (alpha, x) grid");
  toy_cmd->add_option("--dataset", toy_dataset, "1-D dataset");
  toy_cmd->add_option("--alpha-points", alpha_points, "Rows from alpha = 0 to --alpha-max");
  toy_cmd->add_option("--alpha-max", toy_alpha_max, "Largest alpha (< 1)");
  toy_cmd->add_option("--x-points", x_points, "Grid points in x");
  toy_cmd->add_option("--x-min", x_lo, "Left end of the x grid");
  toy_cmd->add_option("--x-max", x_hi, "Right end of the x grid");
  toy_cmd->add_option("--out-dir", toy_out, "Output directory");

  // train-schedule
  Overrides train_opts;
  std::optional<std::size_t> train_steps;
  auto* train_cmd =
      app.add_subcommand("train-schedule", "Online schedule adaptation with binned rate estimates");
  train_opts.attach(train_cmd);
  train_cmd->add_option("--steps", train_steps, "Training iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*rate_cmd) {
      auto cfg = rate_opts.resolve();
      auto est = crs::cmd_compute_rate(cfg, metric, rate_out);
      print_warnings(est.warnings);
      std::cout << "wrote " << rate_out << " (" << est.rate.size() << " knots)\n";
    } else if (*solve_cmd) {
      std::vector<std::filesystem::path> paths(rate_files.begin(), rate_files.end());
      auto s = crs::cmd_solve_schedule(paths, solve_weights, solve_xis, alpha_max, alpha_min, knots,
                                       schedule_out);
      std::cout << "wrote " << schedule_out << " (" << s.size() << " knots)\n";
    } else if (*sample_cmd) {
      auto cfg = sample_opts.resolve();
      auto samples = crs::cmd_sample(cfg, sample_schedule, sample_nfe, samples_out);
      std::cout << "wrote " << samples_out << " (" << samples.cols() << " samples)\n";
    } else if (*eval_cmd) {
      auto cfg = eval_opts.resolve();
      auto report = crs::cmd_evaluate(cfg);
      print_warnings(report.warnings);
      std::cout << "schedule,sampler,nfe,error,std_error\n";
      for (const auto& r : report.rows)
        std::cout << crs::io::csv_field(r.schedule) << ',' << r.sampler << ',' << r.nfe << ',' << r.error << ','
                  << r.std_error << '\n';
    } else if (*sweep_cmd) {
      auto cfg = sweep_opts.resolve();
      if (!sweep_weights.empty()) cfg.sweep.weights = sweep_weights;
      if (!sweep_xis.empty()) cfg.sweep.xis = sweep_xis;
      cfg.validate();
      auto report = crs::cmd_sweep(cfg);
      std::cout << "nfe,stage,w_first,w_second,xi_first,xi_second,error,best\n";
      for (const auto& r : report.rows)
        std::cout << r.nfe << ',' << r.stage << ',' << r.weight_first << ',' << r.weight_second
                  << ',' << r.xi_first << ',' << r.xi_second << ',' << r.error << ','
                  << (r.best ? "*" : "") << '\n';
    } else if (*toy_cmd) {
      crs::detail::require(toy_alpha_max < 1.0, "--alpha-max must be < 1");
      auto grid = crs::cmd_toy_figure(toy_dataset, crs::linspace(0.0, toy_alpha_max, alpha_points),
                                      crs::linspace(x_lo, x_hi, x_points), toy_out);
      std::cout << "wrote " << toy_out << "/density.csv; modes " << grid.modes.front() << " -> "
                << grid.modes.back() << '\n';
    } else if (*train_cmd) {
      auto cfg = train_opts.resolve();
      if (train_steps) cfg.train_steps = *train_steps;
      auto s = crs::cmd_train_schedule(cfg, cfg.output_dir);
      std::cout << "wrote " << cfg.output_dir << "/schedule.csv (" << s.size() << " knots)\n";
    }
  } catch (const crs::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
