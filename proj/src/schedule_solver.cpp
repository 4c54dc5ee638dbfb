#include "crs/schedule_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crs/error.hpp"

namespace crs {
namespace {

// Uniform grid over [lo, hi] merged with the table's own knots, so that kinks
// of the piecewise-linear rate fall on grid points.
std::vector<double> refined_grid(std::span<const double> knots, double lo, double hi,
                                 std::size_t intervals) {
  std::vector<double> grid;
  grid.reserve(intervals + 1 + knots.size());
  for (std::size_t i = 0; i <= intervals; ++i) {
    grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(intervals));
  }
  grid.back() = hi;
  for (double a : knots) {
    if (a > lo && a < hi) grid.push_back(a);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void check_bounds(double alpha_min, double alpha_max) {
  detail::require(std::isfinite(alpha_min) && std::isfinite(alpha_max),
                  "bounds must be finite");
  detail::require(alpha_min >= 0.0 && alpha_max <= 1.0, "bounds must lie in [0,1]");
  detail::require(alpha_min < alpha_max, "degenerate bounds: alpha_min >= alpha_max");
}

void check_xi(double xi) {
  detail::require(std::isfinite(xi) && xi > 0.0, "xi must be positive");
}

// Integrand values max(v, floor)^xi on `grid`; throws when the raw rate
// never reaches the floor (identically zero on the interval).
std::vector<double> powered_rate(const RateTable& rate, double xi,
                                 const std::vector<double>& grid, double floor) {
  std::vector<double> f(grid.size());
  double raw_max = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double v = rate(grid[j]);
    raw_max = std::max(raw_max, v);
    f[j] = std::pow(std::max(v, floor), xi);
  }
  detail::require(raw_max >= floor, "rate is identically zero on the requested interval");
  return f;
}

}  // namespace

double integrate_rate_power(const RateTable& rate, double xi, double lo, double hi,
                            const SolveOptions& options) {
  check_bounds(lo, hi);
  check_xi(xi);
  const auto grid = refined_grid(rate.alphas(), lo, hi, options.quadrature_intervals);
  const auto f = powered_rate(rate, xi, grid, options.rate_floor);
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    total += 0.5 * (f[j] + f[j + 1]) * (grid[j + 1] - grid[j]);
  }
  return total;
}

NoiseSchedule solve_schedule(const RateTable& rate, double xi, double alpha_max,
                             double alpha_min, std::size_t n_knots,
                             const SolveOptions& options) {
  check_xi(xi);
  check_bounds(alpha_min, alpha_max);
  detail::require(n_knots >= 2, "schedule needs at least 2 knots");

  const auto grid = refined_grid(rate.alphas(), alpha_min, alpha_max,
                                 std::max<std::size_t>(options.quadrature_intervals, 1));
  const auto f = powered_rate(rate, xi, grid, options.rate_floor);

  // cum[j] = integral from grid[j] up to alpha_max.
  const std::size_t m = grid.size();
  std::vector<double> cum(m, 0.0);
  for (std::size_t j = m - 1; j-- > 0;) {
    cum[j] = cum[j + 1] + 0.5 * (f[j] + f[j + 1]) * (grid[j + 1] - grid[j]);
  }
  const double total = cum.front();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("schedule normalization constant is not positive and finite");
  }

  std::vector<double> knots_t(n_knots);
  std::vector<double> knots_alpha(n_knots);
  const double last = static_cast<double>(n_knots - 1);
  for (std::size_t k = 0; k < n_knots; ++k) knots_t[k] = static_cast<double>(k) / last;
  knots_t.back() = 1.0;
  knots_alpha.front() = alpha_max;
  knots_alpha.back() = alpha_min;

  // Time fraction s_j = cum[j] / total decreases from 1 (alpha_min) to 0
  // (alpha_max). Walk the grid downward while target times increase.
  std::size_t j = m - 1;
  for (std::size_t k = 1; k + 1 < n_knots; ++k) {
    const double target = knots_t[k] * total;
    while (j > 0 && cum[j - 1] < target) --j;
    if (j == 0) {
      knots_alpha[k] = alpha_min;
      continue;
    }
    // target lies in [cum[j], cum[j-1]].
    const double span = cum[j - 1] - cum[j];
    const double w = span > 0.0 ? (target - cum[j]) / span : 0.0;
    knots_alpha[k] = grid[j] + (grid[j - 1] - grid[j]) * w;
  }
  for (std::size_t k = 1; k < n_knots; ++k) {
    if (!(knots_alpha[k] < knots_alpha[k - 1])) {
      throw NumericalError("schedule inversion produced non-decreasing knots at index " +
                           std::to_string(k) + "; reduce n_knots or xi");
    }
  }
  return NoiseSchedule(std::move(knots_t), std::move(knots_alpha));
}

RateTable schedule_to_rate(const NoiseSchedule& schedule) {
  const auto t = schedule.knots_t();
  const auto a = schedule.knots_alpha();
  const std::size_t n = t.size();
  std::vector<double> rate(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
    const double slope = (a[hi] - a[lo]) / (t[hi] - t[lo]);
    if (!(slope < 0.0) || !std::isfinite(slope)) {
      throw ValidationError("schedule has a zero-slope segment near t=" + std::to_string(t[k]));
    }
    rate[k] = -1.0 / slope;
  }
  std::vector<double> alphas(a.rbegin(), a.rend());
  std::reverse(rate.begin(), rate.end());
  RateTable raw(alphas, rate);
  const double norm = raw.integral(alphas.front(), alphas.back());
  for (double& v : rate) v /= norm;
  return RateTable(std::move(alphas), std::move(rate));
}

RateTable combine_rates(const std::vector<WeightedRate>& components, double alpha_min,
                        double alpha_max, const SolveOptions& options) {
  detail::require(!components.empty(), "combine_rates: empty component list");
  check_bounds(alpha_min, alpha_max);

  double weight_sum = 0.0;
  std::vector<double> knots;
  for (const auto& c : components) {
    detail::require(c.weight.weight >= 0.0 && c.weight.weight <= 1.0,
                    "combine_rates: weight outside [0,1]");
    check_xi(c.weight.xi);
    detail::require(c.rate.alpha_lo() < alpha_max && c.rate.alpha_hi() > alpha_min,
                    "combine_rates: table does not overlap the target interval");
    weight_sum += c.weight.weight;
    knots.insert(knots.end(), c.rate.alphas().begin(), c.rate.alphas().end());
  }
  detail::require(std::abs(weight_sum - 1.0) <= 1e-12, "combine_rates: weights must sum to 1");

  std::sort(knots.begin(), knots.end());
  const auto grid = refined_grid(knots, alpha_min, alpha_max, options.quadrature_intervals);
  std::vector<double> combined(grid.size(), 0.0);
  for (const auto& c : components) {
    const double norm = integrate_rate_power(c.rate, c.weight.xi, alpha_min, alpha_max, options);
    const auto f = powered_rate(c.rate, c.weight.xi, grid, options.rate_floor);
    for (std::size_t j = 0; j < grid.size(); ++j) combined[j] += c.weight.weight * f[j] / norm;
  }
  return RateTable(grid, std::move(combined));
}

std::vector<double> discretize(const NoiseSchedule& schedule, std::size_t n_steps,
                               bool prepend_unit_alpha) {
  detail::require(n_steps >= 1, "discretize: n_steps must be >= 1");
  std::vector<double> out;
  out.reserve(n_steps + 2);
  if (prepend_unit_alpha && schedule.alpha_max() < 1.0) out.push_back(1.0);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    out.push_back(schedule.alpha(static_cast<double>(i) / static_cast<double>(n_steps)));
  }
  return out;
}

}  // namespace crs
