#pragma once

#include <cstddef>
#include <vector>

#include "crs/noise_schedule.hpp"
#include "crs/rate_table.hpp"

namespace crs {

/// Weight and exponent of one rate function inside a combination.
struct MetricWeight {
  double weight = 1.0;
  double xi = 1.0;
};

struct WeightedRate {
  RateTable rate;
  MetricWeight weight;
};

struct SolveOptions {
  /// Minimum number of uniform quadrature intervals between the bounds.
  std::size_t quadrature_intervals = 4096;
  /// Rates below this are raised to it before exponentiation.
  double rate_floor = 1e-12;
};

/// Constant-rate schedule for `rate`: -dalpha/dt = C v(alpha)^-xi with
/// C = integral of v^xi over [alpha_min, alpha_max]. Equivalently
/// t(alpha) = (int_alpha^alpha_max v^xi) / C, tabulated by trapezoid
/// quadrature and inverted on `n_knots` uniform time knots.
NoiseSchedule solve_schedule(const RateTable& rate, double xi, double alpha_max,
                             double alpha_min, std::size_t n_knots,
                             const SolveOptions& options = {});

/// Rate implied by an existing schedule, v(alpha) proportional to
/// -(dalpha/dt)^-1, normalized to unit integral over the schedule's range.
RateTable schedule_to_rate(const NoiseSchedule& schedule);

/// Normalized mixture sum_m w_m v_m^xi_m / C_m over [alpha_min, alpha_max].
/// Weights must sum to 1 within 1e-12.
RateTable combine_rates(const std::vector<WeightedRate>& components, double alpha_min,
                        double alpha_max, const SolveOptions& options = {});

/// alpha(i / n_steps) for i = 0..n_steps. With `prepend_unit_alpha`, a clean
/// endpoint alpha = 1 is put in front when alpha_max < 1.
std::vector<double> discretize(const NoiseSchedule& schedule, std::size_t n_steps,
                               bool prepend_unit_alpha = false);

/// Trapezoid integral of max(v, floor)^xi on the refined grid used by the
/// solver.
double integrate_rate_power(const RateTable& rate, double xi, double lo, double hi,
                            const SolveOptions& options = {});

}  // namespace crs
