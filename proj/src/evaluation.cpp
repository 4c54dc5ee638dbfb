#include "crs/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "crs/diffusion.hpp"
#include "crs/error.hpp"
#include "crs/rate_metrics.hpp"
#include "crs/rng.hpp"

namespace crs {

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  detail::require(!a.empty() && !b.empty(), "wasserstein_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  // Walk the merged quantile breakpoints i/n and j/m.
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / n;
    const double next_b = static_cast<double>(j + 1) / m;
    const double next = std::min(next_a, next_b);
    const double d = a[i] - b[j];
    total += (next - u) * d * d;
    u = next;
    // Equal rationals round to the same double, so shared breakpoints advance both.
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return std::sqrt(std::max(total, 0.0));
}

namespace {

std::vector<double> row_values(const Eigen::MatrixXd& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

std::vector<double> dataset_values(const PointDataset& ds) {
  return std::vector<double>(ds.points().data(), ds.points().data() + ds.points().size());
}

}  // namespace

double moment_frechet(const Eigen::MatrixXd& samples, const PointDataset& reference) {
  detail::require(samples.rows() == reference.dim(), "moment_frechet: dimension mismatch");
  detail::require(samples.cols() >= 2, "moment_frechet: need at least 2 samples");
  const Eigen::VectorXd mu = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - mu;
  Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(samples.cols() - 1);
  cov = 0.5 * (cov + cov.transpose());
  return frechet_distance(mu, cov, reference.mean(), reference.covariance());
}

double sample_error(const Eigen::MatrixXd& samples, const PointDataset& reference) {
  detail::require(samples.rows() == reference.dim(), "sample_error: dimension mismatch");
  if (reference.dim() == 1) return wasserstein_1d(row_values(samples), dataset_values(reference));
  return moment_frechet(samples, reference);
}

namespace {

Eigen::MatrixXd resample_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
  return out;
}

double std_dev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<Eigen::Index> draw_indices(Rng& rng, Eigen::Index n) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (auto& k : idx) k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  return idx;
}

}  // namespace

double bootstrap_std_error(const Eigen::MatrixXd& samples, const PointDataset& reference,
                           std::size_t n_boot, std::uint64_t seed) {
  detail::require(n_boot >= 2, "bootstrap: need at least 2 replicates");
  Rng rng(seed, 7);
  std::vector<double> stats;
  stats.reserve(n_boot);
  for (std::size_t b = 0; b < n_boot; ++b)
    stats.push_back(sample_error(resample_columns(samples, draw_indices(rng, samples.cols())),
                                 reference));
  return std_dev(stats);
}

double paired_bootstrap_std_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                  const PointDataset& reference, std::size_t n_boot,
                                  std::uint64_t seed) {
  detail::require(a.cols() == b.cols() && a.rows() == b.rows(),
                  "paired bootstrap: sample sets must have the same shape");
  detail::require(n_boot >= 2, "bootstrap: need at least 2 replicates");
  Rng rng(seed, 7);
  std::vector<double> stats;
  stats.reserve(n_boot);
  for (std::size_t r = 0; r < n_boot; ++r) {
    const auto idx = draw_indices(rng, a.cols());
    stats.push_back(sample_error(resample_columns(a, idx), reference) -
                    sample_error(resample_columns(b, idx), reference));
  }
  return std_dev(stats);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  detail::require(n >= 2, "linspace: need at least 2 points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

std::size_t count_modes(const std::vector<double>& v) {
  std::size_t modes = 0;
  std::size_t i = 1;
  while (i + 1 < v.size()) {
    if (v[i] > v[i - 1]) {
      std::size_t j = i;
      while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
      if (j + 1 < v.size() && v[j + 1] < v[i]) ++modes;
      i = j + 1;
    } else {
      ++i;
    }
  }
  return modes;
}

DensityGrid density_grid(const PointDataset& dataset, const std::vector<double>& alphas,
                         const std::vector<double>& xs) {
  detail::require(dataset.dim() == 1, "density grid: dataset must be one-dimensional");
  detail::require(!alphas.empty() && xs.size() >= 3, "density grid: empty grid");
  DensityGrid g{alphas, xs, Eigen::MatrixXd(alphas.size(), xs.size()), {}};
  Eigen::VectorXd x(1);
  for (std::size_t r = 0; r < alphas.size(); ++r) {
    std::vector<double> row(xs.size());
    for (std::size_t c = 0; c < xs.size(); ++c) {
      x[0] = xs[c];
      row[c] = diffused_density(dataset, alphas[r], x);
      g.density(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    g.modes.push_back(count_modes(row));
  }
  return g;
}

double row_integral(const DensityGrid& grid, Eigen::Index row) {
  double total = 0.0;
  for (std::size_t c = 1; c < grid.xs.size(); ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    total += 0.5 * (grid.xs[c] - grid.xs[c - 1]) * (grid.density(row, i) + grid.density(row, i - 1));
  }
  return total;
}

}  // namespace crs
