#pragma once

#include <span>
#include <vector>

namespace crs {

/// Tabulated rate function v(alpha) on a strictly increasing alpha grid.
///
/// Evaluation is piecewise-linear between grid points and clamped to the
/// endpoint values outside the grid.
class RateTable {
 public:
  RateTable(std::vector<double> alphas, std::vector<double> values);

  double operator()(double alpha) const;

  std::span<const double> alphas() const { return alphas_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return alphas_.size(); }
  double alpha_lo() const { return alphas_.front(); }
  double alpha_hi() const { return alphas_.back(); }

  /// Trapezoid integral of the interpolant over [lo, hi] (exact for the
  /// piecewise-linear table).
  double integral(double lo, double hi) const;

  friend bool operator==(const RateTable&, const RateTable&) = default;

 private:
  std::vector<double> alphas_;
  std::vector<double> values_;
};

}  // namespace crs
