#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "crs/dataset.hpp"
#include "crs/predictor.hpp"

namespace crs {

/// A noisy sample together with its noise level.
struct DiffusionState {
  Eigen::VectorXd x;
  double alpha = 1.0;

  double sigma() const;
};

/// Below this alpha the posterior weights are taken as uniform.
inline constexpr double kAlphaFloor = 1e-6;

/// Density of the diffused empirical mixture (1/N) sum_n N(x; alpha x_n, sigma^2 I).
double diffused_density(const PointDataset& dataset, double alpha,
                        const Eigen::Ref<const Eigen::VectorXd>& x);
double log_diffused_density(const PointDataset& dataset, double alpha,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// Forward Markov chain x_t = beta_t x_{t-1} + delta_t z. Sample i starts from
/// dataset point i mod N (drawn from its marginal when alphas[0] < 1) and uses
/// its own random stream, so the result is independent of `workers`.
/// Returns one d x n_samples matrix per alpha.
std::vector<Eigen::MatrixXd> simulate_forward(const PointDataset& dataset,
                                              const std::vector<double>& alphas,
                                              std::size_t n_samples, std::uint64_t seed,
                                              std::size_t workers = 1);

/// Bayes posterior mean E[x_0 | x_alpha] under the empirical prior:
/// softmax-weighted average of the data points.
class PosteriorMeanPredictor final : public Predictor {
 public:
  explicit PosteriorMeanPredictor(PointDataset dataset);

  Eigen::Index dim() const override { return dataset_.dim(); }
  using Predictor::predict_data;
  void predict_data(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                    Eigen::Ref<Eigen::VectorXd> out) const override;

  /// Normalized posterior weights over the data points.
  Eigen::VectorXd weights(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha) const;

  const PointDataset& dataset() const { return dataset_; }

 private:
  PointDataset dataset_;
  Eigen::VectorXd sq_norms_;
  Eigen::VectorXd mean_;
};

/// Posterior mean for an isotropic Gaussian prior N(mean, variance I); linear
/// in x. Its probability-flow ODE has a closed form (see exact_flow), which
/// makes it the reference for sampler convergence-order checks.
class GaussianPriorPredictor final : public Predictor {
 public:
  GaussianPriorPredictor(Eigen::VectorXd mean, double variance);

  Eigen::Index dim() const override { return mean_.size(); }
  using Predictor::predict_data;
  void predict_data(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                    Eigen::Ref<Eigen::VectorXd> out) const override;

  /// Exact probability-flow transport of x from alpha_from to alpha_to.
  Eigen::VectorXd exact_flow(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha_from,
                             double alpha_to) const;

 private:
  Eigen::VectorXd mean_;
  double variance_;
};

/// eps_hat = (x - alpha x_hat) / sigma.
Eigen::VectorXd noise_from_data(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                                const Eigen::Ref<const Eigen::VectorXd>& x_hat);

/// Free-function form of the posterior mean.
Eigen::VectorXd posterior_mean_predictor(const PointDataset& dataset,
                                         const Eigen::Ref<const Eigen::VectorXd>& x, double alpha);

}  // namespace crs
