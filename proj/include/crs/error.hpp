#pragma once

#include <stdexcept>
#include <string>

namespace crs {

// Caller-side mistakes: bad arguments, malformed files, unknown names.
// The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failures detected at run time (singular covariance, degenerate
// integrals). The CLI maps these to exit code 1.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}
}  // namespace detail

}  // namespace crs
