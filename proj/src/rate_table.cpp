#include "crs/rate_table.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crs/error.hpp"

namespace crs {

RateTable::RateTable(std::vector<double> alphas, std::vector<double> values)
    : alphas_(std::move(alphas)), values_(std::move(values)) {
  detail::require(alphas_.size() == values_.size(),
                  "rate table: alphas and values differ in length");
  detail::require(alphas_.size() >= 2, "rate table: need at least 2 grid points");
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    const double a = alphas_[i];
    const double v = values_[i];
    detail::require(std::isfinite(a) && a >= 0.0 && a <= 1.0,
                    "rate table: alpha " + std::to_string(a) + " outside [0,1]");
    detail::require(std::isfinite(v) && v >= 0.0,
                    "rate table: value at index " + std::to_string(i) +
                        " is negative or non-finite");
    if (i > 0) {
      detail::require(alphas_[i - 1] < a, "rate table: alphas not strictly increasing");
    }
  }
}

double RateTable::operator()(double alpha) const {
  if (alpha <= alphas_.front()) return values_.front();
  if (alpha >= alphas_.back()) return values_.back();
  const auto hi = std::upper_bound(alphas_.begin(), alphas_.end(), alpha);
  const auto j = static_cast<std::size_t>(hi - alphas_.begin());
  const double a0 = alphas_[j - 1];
  const double a1 = alphas_[j];
  const double w = (alpha - a0) / (a1 - a0);
  return (1.0 - w) * values_[j - 1] + w * values_[j];
}

double RateTable::integral(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  double total = 0.0;
  double prev_a = lo;
  double prev_v = (*this)(lo);
  auto it = std::upper_bound(alphas_.begin(), alphas_.end(), lo);
  for (; it != alphas_.end() && *it < hi; ++it) {
    const double v = values_[static_cast<std::size_t>(it - alphas_.begin())];
    total += 0.5 * (prev_v + v) * (*it - prev_a);
    prev_a = *it;
    prev_v = v;
  }
  total += 0.5 * (prev_v + (*this)(hi)) * (hi - prev_a);
  return total;
}

}  // namespace crs
