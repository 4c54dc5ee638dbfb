#include "crs/adaptive_training.hpp"

#include <algorithm>
#include <cmath>

#include "crs/error.hpp"
#include "crs/schedule_solver.hpp"

namespace crs {

void AdaptiveConfig::validate() const {
  detail::require(bins >= 1, "adaptive: B must be >= 1");
  detail::require(decay >= 0.0 && decay < 1.0, "adaptive: decay must lie in [0,1)");
  detail::require(alpha_min >= 0.0 && alpha_min <= alpha_th && alpha_th < alpha_max &&
                      alpha_max <= 1.0,
                  "adaptive: need 0 <= alpha_min <= alpha_th < alpha_max <= 1");
  detail::require(delta_alpha > 0.0 && delta_alpha < alpha_th,
                  "adaptive: need 0 < delta_alpha < alpha_th");
  detail::require(xi > 0.0, "adaptive: xi must be positive");
  detail::require(initial_value >= 0.0, "adaptive: initial value must be >= 0");
  detail::require(refresh_interval >= 1, "adaptive: refresh interval must be >= 1");
  detail::require(schedule_knots >= 2, "adaptive: schedule needs at least 2 knots");
  detail::require(batch_size >= 1, "adaptive: batch size must be >= 1");
}

nlohmann::json AdaptiveConfig::to_json() const {
  return {{"bins", bins},           {"decay", decay},
          {"alpha_max", alpha_max}, {"alpha_min", alpha_min},
          {"alpha_th", alpha_th},   {"delta_alpha", delta_alpha},
          {"xi", xi},               {"initial_value", initial_value},
          {"warmup", warmup},       {"refresh_interval", refresh_interval},
          {"schedule_knots", schedule_knots}, {"batch_size", batch_size}};
}

AdaptiveConfig AdaptiveConfig::from_json(const nlohmann::json& j) {
  AdaptiveConfig c;
  c.bins = j.value("bins", c.bins);
  c.decay = j.value("decay", c.decay);
  c.alpha_max = j.value("alpha_max", c.alpha_max);
  c.alpha_min = j.value("alpha_min", c.alpha_min);
  c.alpha_th = j.value("alpha_th", c.alpha_th);
  c.delta_alpha = j.value("delta_alpha", c.delta_alpha);
  c.xi = j.value("xi", c.xi);
  c.initial_value = j.value("initial_value", c.initial_value);
  c.warmup = j.value("warmup", c.warmup);
  c.refresh_interval = j.value("refresh_interval", c.refresh_interval);
  c.schedule_knots = j.value("schedule_knots", c.schedule_knots);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.validate();
  return c;
}

BinnedRateEstimator::BinnedRateEstimator(AdaptiveConfig config)
    : config_(config), d2_(config.bins, config.initial_value), counts_(config.bins, 0) {
  config_.validate();
}

std::size_t BinnedRateEstimator::bin_index(double alpha) const {
  detail::require(alpha >= config_.alpha_th && alpha <= config_.alpha_max,
                  "bin_index: alpha outside [alpha_th, alpha_max]");
  const double b = std::floor((alpha - config_.alpha_th) / (config_.alpha_max - config_.alpha_th) *
                              static_cast<double>(config_.bins));
  return std::min(static_cast<std::size_t>(b), config_.bins - 1);
}

void BinnedRateEstimator::ema_update(std::size_t bin, double value) {
  detail::require(bin < config_.bins, "ema_update: bin index out of range");
  detail::require(value >= 0.0 && std::isfinite(value), "ema_update: value must be finite and >= 0");
  d2_[bin] = config_.decay * d2_[bin] + (1.0 - config_.decay) * value;
  ++counts_[bin];
}

double BinnedRateEstimator::bin_edge(std::size_t b) const {
  if (b == config_.bins) return config_.alpha_max;
  return config_.alpha_th + (config_.alpha_max - config_.alpha_th) * static_cast<double>(b) /
                                static_cast<double>(config_.bins);
}

RateTable BinnedRateEstimator::rate_from_bins() const {
  const std::size_t B = config_.bins;
  std::vector<double> x, y;
  x.reserve(B + 2);
  y.reserve(B + 2);
  auto v = [&](std::size_t b) { return std::sqrt(d2_[b] / config_.delta_alpha); };
  if (config_.alpha_min < config_.alpha_th) {
    x.push_back(config_.alpha_min);
    y.push_back(v(0));
  }
  for (std::size_t b = 0; b <= B; ++b) {
    x.push_back(bin_edge(b));
    y.push_back(v(std::min(b, B - 1)));
  }
  return RateTable(std::move(x), std::move(y));
}

nlohmann::json BinnedRateEstimator::to_json() const {
  return {{"config", config_.to_json()}, {"d2", d2_}, {"updates", counts_}};
}

BinnedRateEstimator BinnedRateEstimator::from_json(const nlohmann::json& j) {
  try {
    BinnedRateEstimator est(AdaptiveConfig::from_json(j.at("config")));
    auto d2 = j.at("d2").get<std::vector<double>>();
    auto counts = j.at("updates").get<std::vector<std::uint64_t>>();
    detail::require(d2.size() == est.config_.bins && counts.size() == est.config_.bins,
                    "estimator checkpoint: bin arrays have the wrong length");
    for (double v : d2) detail::require(v >= 0.0, "estimator checkpoint: negative bin value");
    est.d2_ = std::move(d2);
    est.counts_ = std::move(counts);
    return est;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("estimator checkpoint: ") + e.what());
  }
}

double probe_pair(const DiffusionState& state, const Predictor& predictor, double delta_alpha,
                  Rng& rng) {
  const double alpha = state.alpha;
  const double alpha_p = alpha - delta_alpha;
  detail::require(delta_alpha > 0.0, "probe_pair: delta_alpha must be positive");
  detail::require(alpha_p > 0.0, "probe_pair: alpha - delta_alpha must stay positive");
  detail::require(alpha < 1.0, "probe_pair: alpha must be < 1");
  const double beta = alpha_p / alpha;
  const double delta = std::sqrt((alpha - alpha_p) * (alpha + alpha_p)) / alpha;
  const Eigen::VectorXd x_p = beta * state.x + delta * rng.normal_vector(state.x.size());
  return (predictor.predict_data(state.x, alpha) - predictor.predict_data(x_p, alpha_p))
      .squaredNorm();
}

TrainingState TrainingState::initial(const AdaptiveConfig& config) {
  config.validate();
  return TrainingState{NoiseSchedule({0.0, 1.0}, {config.alpha_max, config.alpha_min}),
                       BinnedRateEstimator(config), 0, {}, 0};
}

StepOutcome training_step(const PointDataset& dataset, const Predictor& predictor,
                          TrainingState& state, Rng& rng, const ModelUpdateHook& hook) {
  const auto& cfg = state.estimator.config();
  detail::require(predictor.dim() == dataset.dim(), "training_step: dimension mismatch");
  const auto n_points = static_cast<std::size_t>(dataset.size());
  const bool probing = state.step >= cfg.warmup;
  StepOutcome out;
  for (std::size_t k = 0; k < cfg.batch_size; ++k) {
    if (state.cursor >= state.order.size() || state.order.size() != n_points) {
      state.order = rng.permutation(n_points);
      state.cursor = 0;
    }
    TrainingSample s;
    s.step = state.step;
    s.x0 = dataset.point(static_cast<Eigen::Index>(state.order[state.cursor++]));

    // alpha(t) = 1 only at t = 0 where the noise target is undefined.
    do {
      s.alpha = state.schedule.alpha(rng.uniform());
    } while (s.alpha >= 1.0);
    const double sigma = sigma_of(s.alpha);
    s.noise = rng.normal_vector(dataset.dim());
    s.x = s.alpha * s.x0 + sigma * s.noise;
    s.noise_prediction = predictor.predict_noise(s.x, s.alpha);
    s.loss = 0.5 * (s.noise_prediction - s.noise).squaredNorm();
    if (hook) hook(s);
    out.loss += s.loss;

    if (probing && s.alpha >= cfg.alpha_th) {
      const double d2 = probe_pair({s.x, s.alpha}, predictor, cfg.delta_alpha, rng);
      state.estimator.ema_update(state.estimator.bin_index(s.alpha), d2);
      ++out.probes;
    }
  }
  out.loss /= static_cast<double>(cfg.batch_size);
  if (probing && (state.step + 1) % cfg.refresh_interval == 0) {
    state.schedule = solve_schedule(state.estimator.rate_from_bins(), cfg.xi, cfg.alpha_max,
                                    cfg.alpha_min, cfg.schedule_knots);
    out.refreshed = true;
  }
  ++state.step;
  return out;
}

double run_adaptive_training(
    const PointDataset& dataset, const Predictor& predictor, TrainingState& state,
    std::size_t n_steps, Rng& rng, const ModelUpdateHook& hook,
    const std::function<void(std::size_t, const NoiseSchedule&)>& on_refresh) {
  double total = 0.0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const auto out = training_step(dataset, predictor, state, rng, hook);
    total += out.loss;
    if (out.refreshed && on_refresh) on_refresh(state.step, state.schedule);
  }
  return n_steps ? total / static_cast<double>(n_steps) : 0.0;
}

}  // namespace crs
