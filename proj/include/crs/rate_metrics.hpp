#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "crs/dataset.hpp"
#include "crs/predictor.hpp"
#include "crs/rate_table.hpp"

namespace crs {

/// Per-step means and covariances of the diffused data, aligned with a
/// decreasing alpha grid.
struct MomentTrajectory {
  std::vector<double> alphas;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
};

/// Forward-simulation settings for the prediction-based rates.
struct VxConfig {
  std::size_t steps = 1000;      // T
  std::size_t samples = 10000;   // S
  double alpha_start = 1.0;      // alpha_s
  double alpha_end = 1e-4;       // alpha_e
  std::size_t workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

/// A rate table with per-knot Monte Carlo standard errors.
struct RateEstimate {
  RateTable rate;
  std::vector<double> std_error;
  std::vector<std::string> warnings;
  nlohmann::json metadata;
};

using FeatureMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}). The trace of the matrix
/// square root is taken from the eigenvalues of S1^{1/2} S2 S1^{1/2};
/// eigenvalues are clamped at zero.
double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                        const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2);

/// Grid alpha_t = 1 - (t / T)^p, t = 0..T.
std::vector<double> power_alpha_grid(std::size_t steps, double power);

/// Simulates the forward chain and returns moments per step (after the
/// optional feature map).
MomentTrajectory forward_moments(const PointDataset& dataset, const std::vector<double>& alphas,
                                 std::size_t n_samples, std::uint64_t seed,
                                 const FeatureMap& feature_map = {}, std::size_t workers = 1);

/// v_t = Frechet(t, t+1) / (alpha_t - alpha_{t+1}), v_T = v_{T-1}.
RateTable rate_from_moments(const MomentTrajectory& moments);

RateEstimate compute_v_fid(const PointDataset& dataset, const std::vector<double>& alphas,
                           std::size_t n_samples, std::uint64_t seed,
                           const FeatureMap& feature_map = {}, std::size_t workers = 1);

/// Rate from changes of the data prediction along simulated trajectories.
RateEstimate compute_v_x(const PointDataset& dataset, const Predictor& predictor,
                         const VxConfig& config, std::uint64_t seed);

/// Same pipeline on noise predictions.
RateEstimate compute_v_eps(const PointDataset& dataset, const Predictor& predictor,
                           const VxConfig& config, std::uint64_t seed);

/// v_x weighted by sqrt(alpha) / (sqrt(2) sigma^2); knots with alpha = 1 are
/// dropped because the weight is singular there.
RateEstimate compute_v_klub(const PointDataset& dataset, const Predictor& predictor,
                            const VxConfig& config, std::uint64_t seed);

/// Applies the KLUB weight to an existing v_x estimate.
RateEstimate klub_from_v_x(const RateEstimate& vx);

/// sqrt(alpha) / (sqrt(2) sigma^2).
double klub_weight(double alpha);

}  // namespace crs
