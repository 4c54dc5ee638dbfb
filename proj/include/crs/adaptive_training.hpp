#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "crs/dataset.hpp"
#include "crs/diffusion.hpp"
#include "crs/noise_schedule.hpp"
#include "crs/predictor.hpp"
#include "crs/rate_table.hpp"
#include "crs/rng.hpp"

namespace crs {

struct AdaptiveConfig {
  std::size_t bins = 100;           // B
  double decay = 0.995;             // e
  double alpha_max = 1.0;
  double alpha_min = 0.0;
  double alpha_th = 0.01;
  double delta_alpha = 1e-3;
  double xi = 1.0;
  double initial_value = 1e-6;
  std::size_t warmup = 1000;
  std::size_t refresh_interval = 100;
  std::size_t schedule_knots = 1001;
  std::size_t batch_size = 256;     // samples per iteration, each probed once

  void validate() const;
  nlohmann::json to_json() const;
  static AdaptiveConfig from_json(const nlohmann::json& j);
};

/// Per-bin exponential moving averages of the squared data-prediction change
/// over evenly spaced alpha bins on [alpha_th, alpha_max].
class BinnedRateEstimator {
 public:
  explicit BinnedRateEstimator(AdaptiveConfig config = {});

  /// floor((alpha - alpha_th) / (alpha_max - alpha_th) * B), clamped to B - 1.
  /// Throws for alpha outside [alpha_th, alpha_max]; callers skip the update
  /// below alpha_th.
  std::size_t bin_index(double alpha) const;

  /// d2_b <- e d2_b + (1 - e) value.
  void ema_update(std::size_t bin, double value);

  /// Left edge alpha_b = alpha_th + (alpha_max - alpha_th) b / B, b = 0..B.
  double bin_edge(std::size_t b) const;

  /// v_b = sqrt(d2_b / delta_alpha) on knots {alpha_min, alpha_0, ..., alpha_B}
  /// with values {v_0, v_0, v_1, ..., v_{B-1}, v_{B-1}}; flat below alpha_th.
  RateTable rate_from_bins() const;

  const AdaptiveConfig& config() const { return config_; }
  const std::vector<double>& values() const { return d2_; }
  const std::vector<std::uint64_t>& update_counts() const { return counts_; }

  nlohmann::json to_json() const;
  static BinnedRateEstimator from_json(const nlohmann::json& j);

 private:
  AdaptiveConfig config_;
  std::vector<double> d2_;
  std::vector<std::uint64_t> counts_;
};

/// Draws x' = beta' x + delta' z at alpha' = alpha - delta_alpha and returns
/// ||x_hat(x, alpha) - x_hat(x', alpha')||^2. No gradients are involved.
double probe_pair(const DiffusionState& state, const Predictor& predictor, double delta_alpha,
                  Rng& rng);

/// One training example as seen by a model-update hook.
struct TrainingSample {
  std::size_t step = 0;
  Eigen::VectorXd x0;
  Eigen::VectorXd x;
  Eigen::VectorXd noise;
  Eigen::VectorXd noise_prediction;
  double alpha = 0.0;
  double loss = 0.0;
};

/// Slot for a trainable model: called once per step with the loss inputs.
using ModelUpdateHook = std::function<void(const TrainingSample&)>;

/// Mutable state of the online schedule adaptation.
struct TrainingState {
  NoiseSchedule schedule;
  BinnedRateEstimator estimator;
  std::size_t step = 0;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  /// Starts from the linear schedule alpha_max - (alpha_max - alpha_min) t.
  static TrainingState initial(const AdaptiveConfig& config);
};

struct StepOutcome {
  double loss = 0.0;  // mean over the batch
  std::size_t probes = 0;
  bool refreshed = false;
};

/// One iteration over batch_size examples: simplified denoising loss at
/// t ~ U(0,1); after warmup every example with alpha >= alpha_th is probed
/// into the estimator; every refresh_interval iterations the schedule is
/// re-solved from the binned rate.
StepOutcome training_step(const PointDataset& dataset, const Predictor& predictor,
                          TrainingState& state, Rng& rng, const ModelUpdateHook& hook = {});

/// Runs `n_steps` iterations; `on_refresh(step, schedule)` fires after each
/// schedule rebuild. Returns the mean loss.
double run_adaptive_training(
    const PointDataset& dataset, const Predictor& predictor, TrainingState& state,
    std::size_t n_steps, Rng& rng, const ModelUpdateHook& hook = {},
    const std::function<void(std::size_t, const NoiseSchedule&)>& on_refresh = {});

}  // namespace crs
