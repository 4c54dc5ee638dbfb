#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "crs/noise_schedule.hpp"

namespace crs::zoo {

// Conventional baseline schedules and VP <-> EDM noise-level conversion.

struct EdmParams {
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
};

inline constexpr std::size_t kLinearSteps = 1000;
inline constexpr double kLinearBetaMin = 1e-4;
inline constexpr double kLinearBetaMax = 0.02;
inline constexpr double kCosineClamp = 1e-9;
inline constexpr double kCosineSampleAlphaMin = 0.01;
inline constexpr double kCosineSampleAlphaMax = 1.0;

/// DDPM linear-beta schedule: alpha_0 = 1, alpha_i = sqrt(1 - beta_i) alpha_{i-1}
/// with beta_i linear from 1e-4 to 0.02, knots at t = i / 1000.
NoiseSchedule linear_schedule();

/// sqrt(sigmoid(lambda)) with lambda = -2 log tan(pi t / 2) + 2 log(64 / d).
/// t is clamped to [1e-9, 1 - 1e-9].
double shifted_cosine_alpha(int resolution, double t);

/// Tabulated shifted-cosine schedule on `n_knots` uniform time knots.
NoiseSchedule shifted_cosine_schedule(int resolution, std::size_t n_knots = 4097);

/// Sampling variant alpha_min + (alpha_max - alpha_min) alpha_shifted(t),
/// with (alpha_min, alpha_max) = (0.01, 1).
NoiseSchedule shifted_cosine_sampling_schedule(int resolution, std::size_t n_knots = 4097);

/// rho-interpolated EDM noise level, sigma_min at t = 0, sigma_max at t = 1.
double edm_sigma(const EdmParams& params, double t);

/// alpha_EDM(t) = 1 / sqrt(1 + sigma(t)^2).
double edm_alpha(const EdmParams& params, double t);

/// alpha_EDM(i / n_steps) for i = 0..n_steps with the first entry forced to 1.
std::vector<double> edm_schedule(const EdmParams& params, std::size_t n_steps);

double alpha_from_edm_sigma(double sigma_edm);
double sigma_from_alpha(double alpha);

/// log(alpha^2 / (1 - alpha^2)).
double log_snr(double alpha);

/// Resolves "linear", "shifted-cosine:<d>" and "edm:<smin>,<smax>,<rho>" into
/// a decreasing list of n_steps + 1 sampling alphas.
std::vector<double> sampling_alphas(const std::string& name, std::size_t n_steps);

/// True if `name` is one of the zoo names above.
bool is_zoo_name(const std::string& name);

}  // namespace crs::zoo
