#pragma once

#include <span>
#include <vector>

namespace crs {

/// Monotone noise schedule t in [0,1] -> alpha, stored as knots and linearly
/// interpolated. alpha(0) and alpha(1) return the first and last knot
/// bit-exactly.
class NoiseSchedule {
 public:
  /// knots_t must start at 0, end at 1 and increase strictly; knots_alpha
  /// must decrease strictly and stay inside [0,1].
  NoiseSchedule(std::vector<double> knots_t, std::vector<double> knots_alpha);

  /// t is clamped to [0,1].
  double alpha(double t) const;
  double sigma(double t) const;

  /// Inverse map alpha -> t, clamped to the schedule's alpha range.
  double time_of(double alpha) const;

  double alpha_max() const { return alpha_.front(); }
  double alpha_min() const { return alpha_.back(); }

  std::span<const double> knots_t() const { return t_; }
  std::span<const double> knots_alpha() const { return alpha_; }
  std::size_t size() const { return t_.size(); }

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;

 private:
  std::vector<double> t_;
  std::vector<double> alpha_;
};

/// sigma = sqrt(1 - alpha^2) for the variance-preserving process.
double sigma_of(double alpha);

/// Sup-norm distance between two schedules, sampled on a uniform t grid.
double schedule_distance(const NoiseSchedule& a, const NoiseSchedule& b,
                         std::size_t n_points = 2001);

}  // namespace crs
