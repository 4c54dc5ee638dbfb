#include "crs/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "crs/error.hpp"
#include "crs/noise_schedule.hpp"
#include "crs/parallel.hpp"

namespace crs {
namespace {

double log_snr_half(double alpha) {
  // log(alpha / sigma); +inf at alpha = 1, -inf at alpha = 0.
  return std::log(alpha) - std::log(sigma_of(alpha));
}

void check_direction(double alpha_t, double alpha_s) {
  detail::require(alpha_t >= 0.0 && alpha_t < 1.0, "sampler step needs alpha_t in [0,1)");
  detail::require(alpha_s > alpha_t && alpha_s <= 1.0,
                  "sampler step must move to a larger alpha (non-monotone schedule)");
}

// Noise streams: index 0 seeds the initial draw, the stochastic steps use
// the same per-sample stream afterwards.
Rng sample_stream(std::uint64_t seed, std::size_t i) { return Rng(seed).split(i); }

}  // namespace

SamplerSpec SamplerSpec::make(SamplerKind kind, double eta, std::vector<double> alphas) {
  detail::require(alphas.size() >= 2, "sampler needs at least 2 alphas");
  detail::require(eta >= 0.0 && eta <= 1.0, "ddim eta must lie in [0,1]");
  std::sort(alphas.begin(), alphas.end());
  detail::require(alphas.front() >= 0.0 && alphas.back() <= 1.0, "sampler alphas must lie in [0,1]");
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    detail::require(alphas[i] > alphas[i - 1], "sampler alphas contain duplicates");
  }
  detail::require(alphas.front() < 1.0, "sampler cannot start at alpha = 1");
  return SamplerSpec{kind, kind == SamplerKind::kDdim ? eta : 0.0, std::move(alphas)};
}

SamplerSpec SamplerSpec::parse(const std::string& name, std::vector<double> alphas) {
  if (name == "dpmpp2m") return make(SamplerKind::kDpmpp2m, 0.0, std::move(alphas));
  if (name.rfind("ddim:", 0) == 0) {
    const std::string arg = name.substr(5);
    char* end = nullptr;
    const double eta = std::strtod(arg.c_str(), &end);
    detail::require(!arg.empty() && end == arg.c_str() + arg.size(),
                    "cannot parse eta in sampler '" + name + "'");
    return make(SamplerKind::kDdim, eta, std::move(alphas));
  }
  if (name == "ddim") return make(SamplerKind::kDdim, 0.0, std::move(alphas));
  throw ValidationError("unknown sampler '" + name + "' (expected ddim:<eta> or dpmpp2m)");
}

std::string SamplerSpec::name() const {
  if (kind == SamplerKind::kDpmpp2m) return "dpmpp2m";
  char buf[32];
  std::snprintf(buf, sizeof buf, "ddim:%g", eta);
  return buf;
}

Eigen::VectorXd ddim_step(const Eigen::Ref<const Eigen::VectorXd>& x_t, double alpha_t,
                          double alpha_s, const Predictor& predictor, double eta, Rng* rng) {
  check_direction(alpha_t, alpha_s);
  const Eigen::VectorXd x_hat = predictor.predict_data(x_t, alpha_t);
  const double sigma_s = sigma_of(alpha_s);
  if (sigma_s == 0.0) return x_hat;
  const double sigma_t = sigma_of(alpha_t);
  const Eigen::VectorXd eps_hat = (x_t - alpha_t * x_hat) / sigma_t;
  const double ratio = alpha_t / alpha_s;
  const double noise = eta * (sigma_s / sigma_t) * std::sqrt((1.0 - ratio) * (1.0 + ratio));
  const double keep2 = sigma_s * sigma_s - noise * noise;
  if (keep2 < -1e-15) throw NumericalError("ddim_step: stochastic variance exceeds sigma_s^2");
  Eigen::VectorXd x_s = alpha_s * x_hat + std::sqrt(std::max(0.0, keep2)) * eps_hat;
  if (noise > 0.0) {
    detail::require(rng != nullptr, "ddim_step: eta > 0 needs a random stream");
    x_s += noise * rng->normal_vector(x_s.size());
  }
  return x_s;
}

DpmStep dpmpp2m_step(const Eigen::Ref<const Eigen::VectorXd>& x_t, double alpha_t, double alpha_s,
                     const Predictor& predictor, const std::optional<DpmCarry>& previous) {
  check_direction(alpha_t, alpha_s);
  Eigen::VectorXd x_hat = predictor.predict_data(x_t, alpha_t);
  const double lambda_t = log_snr_half(alpha_t);
  const double sigma_s = sigma_of(alpha_s);
  if (sigma_s == 0.0) return {x_hat, {x_hat, lambda_t}};
  const double lambda_s = log_snr_half(alpha_s);
  const double h = lambda_s - lambda_t;
  if (!(h > 0.0)) throw ValidationError("dpmpp2m_step: log-SNR is not increasing");
  const double sigma_t = sigma_of(alpha_t);
  Eigen::VectorXd denoised = x_hat;
  if (previous) {
    const double h_prev = lambda_t - previous->lambda;
    if (!(h_prev > 0.0)) throw ValidationError("dpmpp2m_step: log-SNR is not increasing");
    const double r = h_prev / h;
    denoised = (1.0 + 0.5 / r) * x_hat - (0.5 / r) * previous->x_hat;
  }
  Eigen::VectorXd x_s = (sigma_s / sigma_t) * x_t - alpha_s * std::expm1(-h) * denoised;
  return {std::move(x_s), {std::move(x_hat), lambda_t}};
}

Eigen::MatrixXd initial_noise(Eigen::Index dim, std::size_t n_samples, std::uint64_t seed) {
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(n_samples));
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng rng = sample_stream(seed, i);
    x.col(static_cast<Eigen::Index>(i)) = rng.normal_vector(dim);
  }
  return x;
}

Eigen::MatrixXd sample_from(const Predictor& predictor, const SamplerSpec& spec,
                            const Eigen::MatrixXd& initial, std::uint64_t seed,
                            std::size_t workers) {
  detail::require(initial.rows() == predictor.dim(), "sampler: initial noise has wrong dimension");
  const auto n = static_cast<std::size_t>(initial.cols());
  Eigen::MatrixXd out(initial.rows(), initial.cols());
  const auto plan = detail::ChunkPlan::make(n, 256);
  detail::for_each_chunk(plan.count(), workers, [&](std::size_t c) {
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      // Stochastic steps draw from a stream distinct from the initial noise.
      Rng rng = Rng(seed, 2).split(i);
      Eigen::VectorXd x = initial.col(static_cast<Eigen::Index>(i));
      std::optional<DpmCarry> carry;
      for (std::size_t k = 0; k + 1 < spec.alphas.size(); ++k) {
        const double a_t = spec.alphas[k];
        const double a_s = spec.alphas[k + 1];
        if (spec.kind == SamplerKind::kDdim) {
          x = ddim_step(x, a_t, a_s, predictor, spec.eta, &rng);
        } else {
          auto step = dpmpp2m_step(x, a_t, a_s, predictor, carry);
          x = std::move(step.x);
          carry = std::move(step.carry);
        }
      }
      out.col(static_cast<Eigen::Index>(i)) = x;
    }
  });
  return out;
}

Eigen::MatrixXd sample(const Predictor& predictor, const SamplerSpec& spec, std::size_t n_samples,
                       std::uint64_t seed, std::size_t workers) {
  detail::require(n_samples >= 1, "sampler: n_samples must be >= 1");
  return sample_from(predictor, spec, initial_noise(predictor.dim(), n_samples, seed), seed, workers);
}

}  // namespace crs
