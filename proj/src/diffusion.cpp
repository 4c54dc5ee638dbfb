#include "crs/diffusion.hpp"

#include <cmath>
#include <numbers>

#include "crs/error.hpp"
#include "crs/noise_schedule.hpp"
#include "crs/parallel.hpp"
#include "crs/rng.hpp"

namespace crs {

Eigen::VectorXd Predictor::predict_noise(const Eigen::Ref<const Eigen::VectorXd>& x,
                                         double alpha) const {
  return noise_from_data(x, alpha, predict_data(x, alpha));
}

double DiffusionState::sigma() const { return sigma_of(alpha); }

double log_diffused_density(const PointDataset& dataset, double alpha,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::require(alpha >= 0.0 && alpha < 1.0, "diffused density needs alpha in [0,1)");
  detail::require(x.size() == dataset.dim(), "diffused density: dimension mismatch");
  const double var = (1.0 - alpha) * (1.0 + alpha);
  const auto n = dataset.size();
  Eigen::VectorXd logs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    logs[i] = -(x - alpha * dataset.point(i)).squaredNorm() / (2.0 * var);
  }
  const double peak = logs.maxCoeff();
  const double lse = peak + std::log((logs.array() - peak).exp().sum());
  const double d = static_cast<double>(dataset.dim());
  return lse - std::log(static_cast<double>(n)) - 0.5 * d * std::log(2.0 * std::numbers::pi * var);
}

double diffused_density(const PointDataset& dataset, double alpha,
                        const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::exp(log_diffused_density(dataset, alpha, x));
}

std::vector<Eigen::MatrixXd> simulate_forward(const PointDataset& dataset,
                                              const std::vector<double>& alphas,
                                              std::size_t n_samples, std::uint64_t seed,
                                              std::size_t workers) {
  detail::require(!alphas.empty(), "simulate_forward: empty alpha grid");
  detail::require(n_samples >= 1, "simulate_forward: n_samples must be >= 1");
  detail::require(alphas.front() <= 1.0 && alphas.back() >= 0.0,
                  "simulate_forward: alphas must lie in [0,1]");
  for (std::size_t t = 1; t < alphas.size(); ++t) {
    detail::require(alphas[t] < alphas[t - 1], "simulate_forward: alphas must strictly decrease");
  }
  detail::require(alphas.front() > 0.0 || alphas.size() == 1,
                  "simulate_forward: chain cannot continue from alpha = 0");

  const auto d = dataset.dim();
  const auto n = static_cast<Eigen::Index>(n_samples);
  std::vector<Eigen::MatrixXd> out(alphas.size(), Eigen::MatrixXd(d, n));
  const Rng root(seed);
  const auto plan = detail::ChunkPlan::make(n_samples, 1024);
  detail::for_each_chunk(plan.count(), workers, [&](std::size_t c) {
    Eigen::VectorXd x(d);
    Eigen::VectorXd z(d);
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      Rng rng = root.split(i);
      const auto col = static_cast<Eigen::Index>(i);
      x = dataset.point(col % dataset.size());
      if (alphas.front() < 1.0) {
        rng.fill_normal(z);
        x = alphas.front() * x + sigma_of(alphas.front()) * z;
      }
      out[0].col(col) = x;
      for (std::size_t t = 1; t < alphas.size(); ++t) {
        const double beta = alphas[t] / alphas[t - 1];
        const double delta = std::sqrt((alphas[t - 1] - alphas[t]) * (alphas[t - 1] + alphas[t])) /
                             alphas[t - 1];
        rng.fill_normal(z);
        x = beta * x + delta * z;
        out[t].col(col) = x;
      }
    }
  });
  return out;
}

PosteriorMeanPredictor::PosteriorMeanPredictor(PointDataset dataset)
    : dataset_(std::move(dataset)),
      sq_norms_(dataset_.points().colwise().squaredNorm().transpose()),
      mean_(dataset_.mean()) {}

Eigen::VectorXd PosteriorMeanPredictor::weights(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                double alpha) const {
  detail::require(alpha >= 0.0 && alpha < 1.0, "posterior mean needs alpha in [0,1)");
  detail::require(x.size() == dataset_.dim(), "posterior mean: dimension mismatch");
  const auto n = dataset_.size();
  if (alpha < kAlphaFloor) return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const double var = (1.0 - alpha) * (1.0 + alpha);
  // -|x - alpha x_n|^2 / (2 var) up to the x-only term.
  Eigen::VectorXd logits =
      (alpha * (dataset_.points().transpose() * x) - 0.5 * alpha * alpha * sq_norms_) / var;
  const double peak = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - peak).exp();
  return w / w.sum();
}

void PosteriorMeanPredictor::predict_data(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                                          Eigen::Ref<Eigen::VectorXd> out) const {
  if (dataset_.size() == 1) {
    detail::require(alpha >= 0.0 && alpha < 1.0, "posterior mean needs alpha in [0,1)");
    out = dataset_.point(0);
    return;
  }
  if (alpha < kAlphaFloor && alpha >= 0.0) {
    out = mean_;
    return;
  }
  out = dataset_.points() * weights(x, alpha);
}

GaussianPriorPredictor::GaussianPriorPredictor(Eigen::VectorXd mean, double variance)
    : mean_(std::move(mean)), variance_(variance) {
  detail::require(mean_.size() >= 1, "gaussian prior: empty mean");
  detail::require(variance_ > 0.0, "gaussian prior: variance must be positive");
}

void GaussianPriorPredictor::predict_data(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          double alpha, Eigen::Ref<Eigen::VectorXd> out) const {
  detail::require(alpha >= 0.0 && alpha < 1.0, "gaussian prior predictor needs alpha in [0,1)");
  const double var = (1.0 - alpha) * (1.0 + alpha);
  const double gain = alpha * variance_ / (alpha * alpha * variance_ + var);
  out = mean_ + gain * (x - alpha * mean_);
}

Eigen::VectorXd GaussianPriorPredictor::exact_flow(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                   double alpha_from, double alpha_to) const {
  auto spread = [this](double a) {
    return std::sqrt(a * a * variance_ + (1.0 - a) * (1.0 + a));
  };
  return alpha_to * mean_ + (spread(alpha_to) / spread(alpha_from)) * (x - alpha_from * mean_);
}

Eigen::VectorXd noise_from_data(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha,
                                const Eigen::Ref<const Eigen::VectorXd>& x_hat) {
  detail::require(alpha >= 0.0 && alpha < 1.0, "noise_from_data needs alpha in [0,1)");
  return (x - alpha * x_hat) / sigma_of(alpha);
}

Eigen::VectorXd posterior_mean_predictor(const PointDataset& dataset,
                                         const Eigen::Ref<const Eigen::VectorXd>& x, double alpha) {
  return PosteriorMeanPredictor(dataset).predict_data(x, alpha);
}

}  // namespace crs
