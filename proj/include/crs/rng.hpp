#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace crs {

/// Counter-based generator: output i of stream (seed, stream) is a pure
/// function of (seed, stream, i). Child streams derived with split() let
/// sharded work reproduce the single-threaded draws exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Eigen::VectorXd normal_vector(Eigen::Index dim);
  void fill_normal(Eigen::Ref<Eigen::VectorXd> out);

  /// Independent child stream keyed by `index`.
  Rng split(std::uint64_t index) const;

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crs
