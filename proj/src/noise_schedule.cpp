#include "crs/noise_schedule.hpp"

#include <algorithm>
#include <cmath>

#include "crs/error.hpp"

namespace crs {

NoiseSchedule::NoiseSchedule(std::vector<double> knots_t, std::vector<double> knots_alpha)
    : t_(std::move(knots_t)), alpha_(std::move(knots_alpha)) {
  detail::require(t_.size() == alpha_.size(), "schedule: knot arrays differ in length");
  detail::require(t_.size() >= 2, "schedule: need at least 2 knots");
  detail::require(t_.front() == 0.0 && t_.back() == 1.0,
                  "schedule: time knots must span exactly [0,1]");
  for (std::size_t i = 0; i < t_.size(); ++i) {
    detail::require(std::isfinite(alpha_[i]) && alpha_[i] >= 0.0 && alpha_[i] <= 1.0,
                    "schedule: alpha outside [0,1]");
    if (i > 0) {
      detail::require(t_[i - 1] < t_[i], "schedule: time knots not strictly increasing");
      detail::require(alpha_[i - 1] > alpha_[i], "schedule: alpha knots not strictly decreasing");
    }
  }
}

double NoiseSchedule::alpha(double t) const {
  if (!(t > 0.0)) return alpha_.front();
  if (t >= 1.0) return alpha_.back();
  const auto hi = std::upper_bound(t_.begin(), t_.end(), t);
  const auto j = static_cast<std::size_t>(hi - t_.begin());
  const double w = (t - t_[j - 1]) / (t_[j] - t_[j - 1]);
  return (1.0 - w) * alpha_[j - 1] + w * alpha_[j];
}

double NoiseSchedule::sigma(double t) const { return sigma_of(alpha(t)); }

double NoiseSchedule::time_of(double a) const {
  if (a >= alpha_.front()) return 0.0;
  if (a <= alpha_.back()) return 1.0;
  // alpha_ is decreasing; find first knot with alpha < a.
  const auto hi = std::upper_bound(alpha_.begin(), alpha_.end(), a, std::greater<>());
  const auto j = static_cast<std::size_t>(hi - alpha_.begin());
  const double w = (alpha_[j - 1] - a) / (alpha_[j - 1] - alpha_[j]);
  return (1.0 - w) * t_[j - 1] + w * t_[j];
}

double sigma_of(double alpha) { return std::sqrt(std::max(0.0, (1.0 - alpha) * (1.0 + alpha))); }

double schedule_distance(const NoiseSchedule& a, const NoiseSchedule& b, std::size_t n_points) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n_points - 1);
    worst = std::max(worst, std::abs(a.alpha(t) - b.alpha(t)));
  }
  return worst;
}

}  // namespace crs
