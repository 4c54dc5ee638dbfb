#include "crs/schedule_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "crs/error.hpp"

namespace crs::zoo {
namespace {

std::vector<double> uniform_times(std::size_t n_knots) {
  std::vector<double> t(n_knots);
  for (std::size_t i = 0; i < n_knots; ++i) {
    t[i] = static_cast<double>(i) / static_cast<double>(n_knots - 1);
  }
  t.back() = 1.0;
  return t;
}

double parse_number(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ValidationError("cannot parse number '" + s + "' in '" + context + "'");
  }
  return v;
}

EdmParams parse_edm(const std::string& name) {
  const std::string args = name.substr(4);
  const auto c1 = args.find(',');
  const auto c2 = c1 == std::string::npos ? std::string::npos : args.find(',', c1 + 1);
  if (c2 == std::string::npos) {
    throw ValidationError("expected edm:<sigma_min>,<sigma_max>,<rho>, got '" + name + "'");
  }
  EdmParams p{parse_number(args.substr(0, c1), name),
              parse_number(args.substr(c1 + 1, c2 - c1 - 1), name),
              parse_number(args.substr(c2 + 1), name)};
  detail::require(p.sigma_min > 0.0 && p.sigma_min < p.sigma_max && p.rho > 0.0,
                  "edm parameters need 0 < sigma_min < sigma_max and rho > 0");
  return p;
}

int parse_resolution(const std::string& name) {
  const double d = parse_number(name.substr(std::string("shifted-cosine:").size()), name);
  detail::require(d >= 1.0 && d == std::floor(d), "shifted-cosine resolution must be an integer >= 1");
  return static_cast<int>(d);
}

}  // namespace

NoiseSchedule linear_schedule() {
  std::vector<double> alpha(kLinearSteps + 1);
  alpha[0] = 1.0;
  for (std::size_t i = 1; i <= kLinearSteps; ++i) {
    const double beta = kLinearBetaMin + (kLinearBetaMax - kLinearBetaMin) /
                                             static_cast<double>(kLinearSteps - 1) *
                                             static_cast<double>(i - 1);
    alpha[i] = std::sqrt(1.0 - beta) * alpha[i - 1];
  }
  return NoiseSchedule(uniform_times(kLinearSteps + 1), std::move(alpha));
}

double shifted_cosine_alpha(int resolution, double t) {
  detail::require(resolution >= 1, "shifted-cosine resolution must be >= 1");
  const double tc = std::clamp(t, kCosineClamp, 1.0 - kCosineClamp);
  const double lambda = -2.0 * std::log(std::tan(std::numbers::pi * tc / 2.0)) +
                        2.0 * std::log(64.0 / static_cast<double>(resolution));
  // sqrt(sigmoid(lambda)) written to stay accurate for large |lambda|.
  return lambda >= 0.0 ? 1.0 / std::sqrt(1.0 + std::exp(-lambda))
                       : std::sqrt(std::exp(lambda) / (1.0 + std::exp(lambda)));
}

NoiseSchedule shifted_cosine_schedule(int resolution, std::size_t n_knots) {
  detail::require(n_knots >= 2, "shifted-cosine schedule needs at least 2 knots");
  auto t = uniform_times(n_knots);
  std::vector<double> alpha(n_knots);
  for (std::size_t i = 0; i < n_knots; ++i) alpha[i] = shifted_cosine_alpha(resolution, t[i]);
  return NoiseSchedule(std::move(t), std::move(alpha));
}

NoiseSchedule shifted_cosine_sampling_schedule(int resolution, std::size_t n_knots) {
  detail::require(n_knots >= 2, "shifted-cosine schedule needs at least 2 knots");
  auto t = uniform_times(n_knots);
  std::vector<double> alpha(n_knots);
  for (std::size_t i = 0; i < n_knots; ++i) {
    alpha[i] = kCosineSampleAlphaMin +
               (kCosineSampleAlphaMax - kCosineSampleAlphaMin) * shifted_cosine_alpha(resolution, t[i]);
  }
  // The clamped sigmoid stops about 1e-9 short of the bounds.
  alpha.front() = kCosineSampleAlphaMax;
  alpha.back() = kCosineSampleAlphaMin;
  return NoiseSchedule(std::move(t), std::move(alpha));
}

double edm_sigma(const EdmParams& params, double t) {
  const double inv_rho = 1.0 / params.rho;
  const double hi = std::pow(params.sigma_max, inv_rho);
  const double lo = std::pow(params.sigma_min, inv_rho);
  return std::pow(hi + (lo - hi) * (1.0 - t), params.rho);
}

double edm_alpha(const EdmParams& params, double t) {
  return alpha_from_edm_sigma(edm_sigma(params, t));
}

std::vector<double> edm_schedule(const EdmParams& params, std::size_t n_steps) {
  detail::require(n_steps >= 1, "edm schedule: n_steps must be >= 1");
  detail::require(params.sigma_min > 0.0 && params.sigma_min < params.sigma_max && params.rho > 0.0,
                  "edm parameters need 0 < sigma_min < sigma_max and rho > 0");
  std::vector<double> alphas(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    alphas[i] = edm_alpha(params, static_cast<double>(i) / static_cast<double>(n_steps));
  }
  alphas[0] = 1.0;
  return alphas;
}

double alpha_from_edm_sigma(double sigma_edm) {
  detail::require(std::isfinite(sigma_edm) && sigma_edm > 0.0, "EDM sigma must be positive");
  return 1.0 / std::sqrt(1.0 + sigma_edm * sigma_edm);
}

double sigma_from_alpha(double alpha) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0,1]");
  return sigma_of(alpha) / alpha;
}

double log_snr(double alpha) {
  detail::require(alpha > 0.0 && alpha < 1.0, "log-SNR needs alpha in (0,1)");
  return std::log(alpha * alpha / ((1.0 - alpha) * (1.0 + alpha)));
}

bool is_zoo_name(const std::string& name) {
  return name == "linear" || name.rfind("shifted-cosine:", 0) == 0 || name.rfind("edm:", 0) == 0;
}

std::vector<double> sampling_alphas(const std::string& name, std::size_t n_steps) {
  detail::require(n_steps >= 1, "n_steps must be >= 1");
  auto sample = [n_steps](const NoiseSchedule& s) {
    std::vector<double> out(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i) {
      out[i] = s.alpha(static_cast<double>(i) / static_cast<double>(n_steps));
    }
    return out;
  };
  if (name == "linear") return sample(linear_schedule());
  if (name.rfind("shifted-cosine:", 0) == 0) {
    return sample(shifted_cosine_sampling_schedule(parse_resolution(name)));
  }
  if (name.rfind("edm:", 0) == 0) return edm_schedule(parse_edm(name), n_steps);
  throw ValidationError("unknown schedule name '" + name + "'");
}

}  // namespace crs::zoo
