#include "crs/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "crs/diffusion.hpp"
#include "crs/error.hpp"
#include "crs/parallel.hpp"
#include "crs/rng.hpp"
#include "crs/samplers.hpp"
#include "crs/schedule_zoo.hpp"
#include "crs/table_io.hpp"

namespace crs {

namespace fs = std::filesystem;
using nlohmann::json;

void SweepGrid::validate() const {
  detail::require(!weights.empty() && !xis.empty(), "sweep: grids must not be empty");
  for (double w : weights) detail::require(w >= 0.0 && w <= 1.0, "sweep: weights must lie in [0,1]");
  for (double x : xis) detail::require(x > 0.0, "sweep: exponents must be positive");
}

void ExperimentConfig::validate() const {
  detail::require(!dataset.empty(), "config: dataset is required");
  detail::require(!metrics.empty(), "config: at least one metric is required");
  for (const auto& m : metrics) {
    detail::require(m.weight >= 0.0 && m.weight <= 1.0, "config: metric weight must lie in [0,1]");
    detail::require(m.xi > 0.0, "config: metric xi must be positive");
  }
  double weight_sum = 0.0;
  for (const auto& m : metrics) weight_sum += m.weight;
  detail::require(std::abs(weight_sum - 1.0) <= 1e-9, "config: metric weights must sum to 1");
  detail::require(!nfe.empty(), "config: NFE list is empty");
  for (auto n : nfe) detail::require(n >= 1, "config: NFE values must be >= 1");
  detail::require(n_samples >= 2, "config: n_samples must be >= 2");
  detail::require(alpha_min >= 0.0 && alpha_min < alpha_max && alpha_max <= 1.0,
                  "config: need 0 <= alpha_min < alpha_max <= 1");
  detail::require(schedule_knots >= 2, "config: schedule_knots must be >= 2");
  detail::require(fid_steps >= 1 && fid_power > 0.0, "config: invalid v_fid grid");
  detail::require(bootstrap >= 2, "config: bootstrap must be >= 2");
  detail::require(workers >= 1, "config: workers must be >= 1");
  vx.validate();
  sweep.validate();
  adaptive.validate();
}

json ExperimentConfig::to_json() const {
  json ms = json::array();
  for (const auto& m : metrics)
    ms.push_back({{"name", m.name}, {"path", m.path}, {"weight", m.weight}, {"xi", m.xi}});
  return {{"dataset", dataset},
          {"metrics", ms},
          {"schedules", schedules},
          {"sampler", sampler},
          {"nfe", nfe},
          {"n_samples", n_samples},
          {"seed", seed},
          {"output_dir", output_dir},
          {"alpha_max", alpha_max},
          {"alpha_min", alpha_min},
          {"schedule_knots", schedule_knots},
          {"vx", vx.to_json()},
          {"fid_steps", fid_steps},
          {"fid_samples", fid_samples},
          {"fid_power", fid_power},
          {"bootstrap", bootstrap},
          {"workers", workers},
          {"sweep", {{"weights", sweep.weights}, {"xis", sweep.xis}}},
          {"adaptive", adaptive.to_json()},
          {"train_steps", train_steps}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  detail::require(j.is_object(), where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    reject_unknown(j,
                   {"dataset", "metrics", "schedules", "sampler", "nfe", "n_samples", "seed",
                    "output_dir", "alpha_max", "alpha_min", "schedule_knots", "vx", "fid_steps",
                    "fid_samples", "fid_power", "bootstrap", "workers", "sweep", "adaptive",
                    "train_steps"},
                   "config");
    c.dataset = j.value("dataset", c.dataset);
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& m : j.at("metrics")) {
        if (m.is_string()) {
          c.metrics.push_back({m.get<std::string>(), "", 1.0, 1.0});
          continue;
        }
        reject_unknown(m, {"name", "path", "weight", "xi"}, "metric");
        MetricSpec spec;
        spec.name = m.value("name", spec.name);
        spec.path = m.value("path", spec.path);
        spec.weight = m.value("weight", spec.weight);
        spec.xi = m.value("xi", spec.xi);
        c.metrics.push_back(spec);
      }
    }
    c.schedules = j.value("schedules", c.schedules);
    c.sampler = j.value("sampler", c.sampler);
    c.nfe = j.value("nfe", c.nfe);
    c.n_samples = j.value("n_samples", c.n_samples);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.alpha_max = j.value("alpha_max", c.alpha_max);
    c.alpha_min = j.value("alpha_min", c.alpha_min);
    c.schedule_knots = j.value("schedule_knots", c.schedule_knots);
    if (j.contains("vx")) {
      const auto& v = j.at("vx");
      reject_unknown(v, {"T", "S", "alpha_s", "alpha_e"}, "vx");
      c.vx.steps = v.value("T", c.vx.steps);
      c.vx.samples = v.value("S", c.vx.samples);
      c.vx.alpha_start = v.value("alpha_s", c.vx.alpha_start);
      c.vx.alpha_end = v.value("alpha_e", c.vx.alpha_end);
    }
    c.fid_steps = j.value("fid_steps", c.fid_steps);
    c.fid_samples = j.value("fid_samples", c.fid_samples);
    c.fid_power = j.value("fid_power", c.fid_power);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.workers = j.value("workers", c.workers);
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      reject_unknown(s, {"weights", "xis"}, "sweep");
      c.sweep.weights = s.value("weights", c.sweep.weights);
      c.sweep.xis = s.value("xis", c.sweep.xis);
    }
    if (j.contains("adaptive")) c.adaptive = AdaptiveConfig::from_json(j.at("adaptive"));
    c.train_steps = j.value("train_steps", c.train_steps);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.vx.workers = c.workers;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json provenance(const ExperimentConfig& config) {
  return {{"code_version", kCodeVersion},
          {"config_hash", config.hash()},
          {"seed", config.seed},
          {"protocol", kProtocolNote}};
}

RateEstimate compute_rate(const std::string& metric, const PointDataset& dataset,
                          const ExperimentConfig& config) {
  VxConfig vx = config.vx;
  vx.workers = config.workers;
  if (metric == "v_fid") {
    return compute_v_fid(dataset, power_alpha_grid(config.fid_steps, config.fid_power),
                         config.fid_samples, config.seed, {}, config.workers);
  }
  if (metric != "v_x" && metric != "v_eps" && metric != "v_klub")
    throw ValidationError("unknown metric '" + metric + "' (expected v_x, v_eps, v_klub or v_fid)");
  const PosteriorMeanPredictor predictor(dataset);
  if (metric == "v_x") return compute_v_x(dataset, predictor, vx, config.seed);
  if (metric == "v_eps") return compute_v_eps(dataset, predictor, vx, config.seed);
  return compute_v_klub(dataset, predictor, vx, config.seed);
}

RateEstimate cmd_compute_rate(const ExperimentConfig& config, const std::string& metric,
                              const fs::path& out) {
  const auto dataset = resolve_dataset(config.dataset);
  auto est = compute_rate(metric, dataset, config);
  io::save(est.rate, out);
  json meta = provenance(config);
  meta["metric"] = metric;
  meta["dataset"] = config.dataset;
  meta["config"] = config.to_json();
  meta["alphas"] = est.rate.alphas();
  meta["std_error"] = est.std_error;
  meta["warnings"] = est.warnings;
  meta["details"] = est.metadata;
  io::write_file(fs::path(out.string() + ".meta.json"), meta.dump(2) + "\n");
  return est;
}

NoiseSchedule cmd_solve_schedule(const std::vector<fs::path>& rate_files,
                                 const std::vector<double>& weights, const std::vector<double>& xis,
                                 double alpha_max, double alpha_min, std::size_t n_knots,
                                 const fs::path& out) {
  detail::require(!rate_files.empty(), "solve-schedule: at least one rate file is required");
  std::vector<double> w = weights, x = xis;
  if (w.empty() && rate_files.size() == 1) w = {1.0};
  if (x.empty()) x.assign(rate_files.size(), 1.0);
  detail::require(w.size() == rate_files.size(), "solve-schedule: one weight per rate file");
  detail::require(x.size() == rate_files.size(), "solve-schedule: one exponent per rate file");
  std::vector<WeightedRate> components;
  for (std::size_t m = 0; m < rate_files.size(); ++m)
    components.push_back({io::load_rate(rate_files[m]), {w[m], x[m]}});
  const auto combined = combine_rates(components, alpha_min, alpha_max);
  auto schedule = solve_schedule(combined, 1.0, alpha_max, alpha_min, n_knots);
  if (!out.empty()) io::save(schedule, out);
  return schedule;
}

ScheduleResolver::ScheduleResolver(const ExperimentConfig& config, PointDataset dataset)
    : config_(config), dataset_(std::move(dataset)) {}

const RateTable& ScheduleResolver::rate(const MetricSpec& metric) {
  const std::string key = metric.path.empty() ? "metric:" + metric.name : "file:" + metric.path;
  auto it = rates_.find(key);
  if (it != rates_.end()) return it->second;
  if (!metric.path.empty()) return rates_.emplace(key, io::load_rate(metric.path)).first->second;
  auto est = compute_rate(metric.name, dataset_, config_);
  for (const auto& w : est.warnings) warnings_.push_back(metric.name + ": " + w);
  return rates_.emplace(key, std::move(est.rate)).first->second;
}

NoiseSchedule ScheduleResolver::combined(const std::vector<MetricSpec>& metrics) {
  std::vector<WeightedRate> components;
  for (const auto& m : metrics) components.push_back({rate(m), {m.weight, m.xi}});
  const auto v = combine_rates(components, config_.alpha_min, config_.alpha_max);
  return solve_schedule(v, 1.0, config_.alpha_max, config_.alpha_min, config_.schedule_knots);
}

NoiseSchedule ScheduleResolver::schedule(const std::string& name) {
  if (name == "crs") return combined(config_.metrics);
  if (name.rfind("crs:", 0) == 0) return combined({MetricSpec{name.substr(4), "", 1.0, 1.0}});
  if (name == "uniform")
    return NoiseSchedule({0.0, 1.0}, {config_.alpha_max, config_.alpha_min});
  if (name.rfind("file:", 0) == 0) return io::load_schedule(name.substr(5));
  if (name == "linear") return zoo::linear_schedule();
  if (name.rfind("shifted-cosine:", 0) == 0) {
    // Same discretization as sampling_alphas uses.
    const auto grid = zoo::sampling_alphas(name, config_.schedule_knots - 1);
    return NoiseSchedule(linspace(0.0, 1.0, grid.size()), grid);
  }
  throw ValidationError("unknown schedule '" + name + "'");
}

std::vector<double> ScheduleResolver::alphas(const std::string& name, std::size_t n_steps) {
  std::vector<double> out =
      zoo::is_zoo_name(name) ? zoo::sampling_alphas(name, n_steps) : discretize(schedule(name), n_steps);
  if (out.back() > 0.05) {
    const std::string w = "schedule '" + name + "' starts sampling at alpha = " +
                          io::format_double(out.back()) + " > 0.05; N(0, I) is a poor start there";
    if (std::find(warnings_.begin(), warnings_.end(), w) == warnings_.end()) warnings_.push_back(w);
  }
  return out;
}

namespace {

json rows_to_json(const std::vector<EvalRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"schedule", r.schedule},
                   {"sampler", r.sampler},
                   {"nfe", r.nfe},
                   {"error", r.error},
                   {"std_error", r.std_error}});
  return out;
}

struct Cell {
  std::vector<double> alphas;
  std::size_t nfe;
  double error = 0.0;
  double std_error = 0.0;
};

// Samples and scores each cell; cells are independent so they run in a pool.
void run_cells(std::vector<Cell>& cells, const ExperimentConfig& config, const PointDataset& ds,
               const Predictor& predictor) {
  detail::for_each_chunk(cells.size(), config.workers, [&](std::size_t c) {
    auto& cell = cells[c];
    const auto spec = SamplerSpec::parse(config.sampler, cell.alphas);
    const auto samples = sample(predictor, spec, config.n_samples, config.seed);
    cell.error = sample_error(samples, ds);
    cell.std_error = bootstrap_std_error(samples, ds, config.bootstrap, config.seed);
  });
}

}  // namespace

EvalReport cmd_evaluate(const ExperimentConfig& config, bool write) {
  config.validate();
  detail::require(!config.schedules.empty(), "evaluate: no schedules listed");
  const auto dataset = resolve_dataset(config.dataset);
  const PosteriorMeanPredictor predictor(dataset);
  ScheduleResolver resolver(config, dataset);
  const auto sampler_name = SamplerSpec::parse(config.sampler, {0.0, 1.0}).name();

  std::vector<Cell> cells;
  std::vector<EvalRow> rows;
  for (const auto& name : config.schedules) {
    for (auto n : config.nfe) {
      cells.push_back({resolver.alphas(name, n), n});
      rows.push_back({name, sampler_name, n, 0.0, 0.0});
    }
  }
  run_cells(cells, config, dataset, predictor);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows[i].error = cells[i].error;
    rows[i].std_error = cells[i].std_error;
  }

  EvalReport report{rows, resolver.warnings(), provenance(config)};
  report.header["dataset"] = config.dataset;
  report.header["config"] = config.to_json();
  if (write) {
    std::ostringstream csv;
    csv << "# " << kProtocolNote << "\n";
    csv << "schedule,sampler,nfe,error,std_error\n";
    for (const auto& r : rows)
      csv << io::csv_field(r.schedule) << ',' << r.sampler << ',' << r.nfe << ',' << io::format_double(r.error)
          << ',' << io::format_double(r.std_error) << '\n';
    const fs::path dir = config.output_dir;
    io::write_file(dir / "results.csv", csv.str());
    json j = report.header;
    j["rows"] = rows_to_json(rows);
    j["warnings"] = report.warnings;
    io::write_file(dir / "report.json", j.dump(2) + "\n");
  }
  return report;
}

Eigen::MatrixXd cmd_sample(const ExperimentConfig& config, const std::string& schedule,
                           std::size_t nfe, const fs::path& out) {
  config.validate();
  detail::require(nfe >= 1, "sample: NFE must be >= 1");
  const auto dataset = resolve_dataset(config.dataset);
  const PosteriorMeanPredictor predictor(dataset);
  ScheduleResolver resolver(config, dataset);
  const auto spec = SamplerSpec::parse(config.sampler, resolver.alphas(schedule, nfe));
  Eigen::MatrixXd samples = sample(predictor, spec, config.n_samples, config.seed, config.workers);
  if (!out.empty()) {
    std::ostringstream csv;
    for (Eigen::Index d = 0; d < samples.rows(); ++d) csv << (d ? ",x" : "x") << d;
    csv << '\n';
    for (Eigen::Index i = 0; i < samples.cols(); ++i) {
      for (Eigen::Index d = 0; d < samples.rows(); ++d)
        csv << (d ? "," : "") << io::format_double(samples(d, i));
      csv << '\n';
    }
    io::write_file(out, csv.str());
  }
  return samples;
}

SweepReport cmd_sweep(const ExperimentConfig& config, bool write) {
  config.validate();
  const auto dataset = resolve_dataset(config.dataset);
  const PosteriorMeanPredictor predictor(dataset);
  ScheduleResolver resolver(config, dataset);
  const bool pair = config.metrics.size() >= 2;
  MetricSpec first = config.metrics[0];
  MetricSpec second = pair ? config.metrics[1] : MetricSpec{};

  auto metrics_for = [&](const SweepRow& r) {
    std::vector<MetricSpec> ms;
    first.weight = r.weight_first;
    first.xi = r.xi_first;
    ms.push_back(first);
    if (pair) {
      second.weight = r.weight_second;
      second.xi = r.xi_second;
      ms.push_back(second);
    }
    return ms;
  };
  auto evaluate = [&](std::vector<SweepRow>& stage_rows) {
    std::vector<Cell> cells;
    for (const auto& r : stage_rows)
      cells.push_back({discretize(resolver.combined(metrics_for(r)), r.nfe), r.nfe});
    run_cells(cells, config, dataset, predictor);
    std::size_t best = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      stage_rows[i].error = cells[i].error;
      stage_rows[i].std_error = cells[i].std_error;
      if (cells[i].error < cells[best].error) best = i;
    }
    stage_rows[best].best = true;
    return stage_rows[best];
  };

  SweepReport report;
  for (auto n : config.nfe) {
    std::vector<SweepRow> stage1;
    if (pair) {
      for (double w : config.sweep.weights) stage1.push_back({n, 1, w, 1.0 - w, 1.0, 1.0});
    } else {
      stage1.push_back({n, 1, 1.0, 0.0, 1.0, 1.0});
    }
    const SweepRow winner = evaluate(stage1);
    std::vector<SweepRow> stage2;
    for (double x1 : config.sweep.xis) {
      if (pair) {
        for (double x2 : config.sweep.xis)
          stage2.push_back({n, 2, winner.weight_first, winner.weight_second, x1, x2});
      } else {
        stage2.push_back({n, 2, winner.weight_first, 0.0, x1, 1.0});
      }
    }
    evaluate(stage2);
    report.rows.insert(report.rows.end(), stage1.begin(), stage1.end());
    report.rows.insert(report.rows.end(), stage2.begin(), stage2.end());
  }
  report.header = provenance(config);
  report.header["dataset"] = config.dataset;
  report.header["first_metric"] = first.path.empty() ? first.name : first.path;
  report.header["second_metric"] = pair ? (second.path.empty() ? second.name : second.path) : "";
  report.header["warnings"] = resolver.warnings();

  if (write) {
    std::ostringstream csv;
    csv << "# " << kProtocolNote << "\n";
    csv << "nfe,stage,w_first,w_second,xi_first,xi_second,error,std_error,best\n";
    for (const auto& r : report.rows)
      csv << r.nfe << ',' << r.stage << ',' << io::format_double(r.weight_first) << ','
          << io::format_double(r.weight_second) << ',' << io::format_double(r.xi_first) << ','
          << io::format_double(r.xi_second) << ',' << io::format_double(r.error) << ','
          << io::format_double(r.std_error) << ',' << (r.best ? 1 : 0) << '\n';
    const fs::path dir = config.output_dir;
    io::write_file(dir / "sweep.csv", csv.str());
    json j = report.header;
    j["config"] = config.to_json();
    io::write_file(dir / "sweep.json", j.dump(2) + "\n");
  }
  return report;
}

DensityGrid cmd_toy_figure(const std::string& dataset_name, const std::vector<double>& alphas,
                           const std::vector<double>& xs, const fs::path& out_dir) {
  const auto dataset = resolve_dataset(dataset_name);
  auto grid = density_grid(dataset, alphas, xs);
  if (dataset_name == "toy3") {
    bool ok = grid.modes.front() == 1 && grid.modes.back() == 3;
    for (std::size_t i = 1; i < grid.modes.size(); ++i) ok = ok && grid.modes[i] >= grid.modes[i - 1];
    if (!ok) throw NumericalError("toy-figure: toy3 mode count does not rise from 1 to 3");
  }
  if (!out_dir.empty()) {
    std::ostringstream dens, modes;
    dens << "alpha";
    for (double x : xs) dens << ',' << io::format_double(x);
    dens << '\n';
    modes << "alpha,modes\n";
    for (std::size_t r = 0; r < alphas.size(); ++r) {
      dens << io::format_double(alphas[r]);
      for (std::size_t c = 0; c < xs.size(); ++c)
        dens << ',' << io::format_double(grid.density(static_cast<Eigen::Index>(r),
                                                      static_cast<Eigen::Index>(c)));
      dens << '\n';
      modes << io::format_double(alphas[r]) << ',' << grid.modes[r] << '\n';
    }
    io::write_file(out_dir / "density.csv", dens.str());
    io::write_file(out_dir / "modes.csv", modes.str());
  }
  return grid;
}

NoiseSchedule cmd_train_schedule(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  const auto dataset = resolve_dataset(config.dataset);
  const PosteriorMeanPredictor predictor(dataset);
  auto state = TrainingState::initial(config.adaptive);
  Rng rng(config.seed);
  std::ostringstream log;
  log << "step,schedule\n";
  run_adaptive_training(dataset, predictor, state, config.train_steps, rng, {},
                        [&](std::size_t step, const NoiseSchedule& s) {
                          const fs::path rel =
                              fs::path("schedules") / ("step_" + std::to_string(step) + ".csv");
                          io::save(s, out_dir / rel);
                          log << step << ',' << rel.string() << '\n';
                        });
  io::write_file(out_dir / "refresh_log.csv", log.str());
  io::save(state.schedule, out_dir / "schedule.csv");
  json est = state.estimator.to_json();
  est["provenance"] = provenance(config);
  est["step"] = state.step;
  io::write_file(out_dir / "estimator.json", est.dump(2) + "\n");
  return state.schedule;
}

}  // namespace crs
