#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crs/predictor.hpp"
#include "crs/rng.hpp"

namespace crs {

enum class SamplerKind { kDdim, kDpmpp2m };

/// Sampler choice plus the alpha grid traversed from noise (smallest alpha)
/// to data (largest alpha, possibly exactly 1).
struct SamplerSpec {
  SamplerKind kind = SamplerKind::kDdim;
  double eta = 0.0;
  std::vector<double> alphas;

  /// Sorts `alphas` ascending and validates; sorting makes the spec
  /// independent of the order the grid was supplied in.
  static SamplerSpec make(SamplerKind kind, double eta, std::vector<double> alphas);
  /// "ddim:<eta>" or "dpmpp2m".
  static SamplerSpec parse(const std::string& name, std::vector<double> alphas);

  std::size_t nfe() const { return alphas.size() - 1; }
  std::string name() const;
};

/// DDIM update from alpha_t to alpha_s > alpha_t. With eta > 0 and
/// sigma_s > 0 a fresh normal draw is taken from `rng`.
Eigen::VectorXd ddim_step(const Eigen::Ref<const Eigen::VectorXd>& x_t, double alpha_t,
                          double alpha_s, const Predictor& predictor, double eta,
                          Rng* rng = nullptr);

/// Data prediction and log-SNR of the previous DPM-Solver++(2M) step.
struct DpmCarry {
  Eigen::VectorXd x_hat;
  double lambda = 0.0;
};

struct DpmStep {
  Eigen::VectorXd x;
  DpmCarry carry;
};

/// DPM-Solver++(2M) update, lambda = log(alpha / sigma). Without `previous`
/// (and on the final step into sigma = 0) this is the first-order update.
DpmStep dpmpp2m_step(const Eigen::Ref<const Eigen::VectorXd>& x_t, double alpha_t, double alpha_s,
                     const Predictor& predictor, const std::optional<DpmCarry>& previous);

/// Runs the sampler from the given starting points (one per column).
Eigen::MatrixXd sample_from(const Predictor& predictor, const SamplerSpec& spec,
                            const Eigen::MatrixXd& initial, std::uint64_t seed,
                            std::size_t workers = 1);

/// Draws x ~ N(0, I) for each sample and runs the sampler. Sample i uses
/// random stream i, so output is independent of the worker count.
Eigen::MatrixXd sample(const Predictor& predictor, const SamplerSpec& spec, std::size_t n_samples,
                       std::uint64_t seed, std::size_t workers = 1);

/// Initial noise matrix used by sample() for the same seed.
Eigen::MatrixXd initial_noise(Eigen::Index dim, std::size_t n_samples, std::uint64_t seed);

}  // namespace crs
