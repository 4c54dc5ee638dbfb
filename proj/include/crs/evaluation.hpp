#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "crs/dataset.hpp"

namespace crs {

/// Exact 2-Wasserstein distance between two 1-D empirical distributions with
/// uniform weights, via the monotone (quantile) coupling. For equal sizes this
/// is the root-mean-square difference of the sorted samples.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

/// Frechet distance between the sample moments (unbiased covariance) and the
/// dataset's population moments.
double moment_frechet(const Eigen::MatrixXd& samples, const PointDataset& reference);

/// W2 against the dataset when d = 1, moment Frechet otherwise.
double sample_error(const Eigen::MatrixXd& samples, const PointDataset& reference);

/// Bootstrap standard error of sample_error (columns resampled with
/// replacement).
double bootstrap_std_error(const Eigen::MatrixXd& samples, const PointDataset& reference,
                           std::size_t n_boot, std::uint64_t seed);

/// Bootstrap standard error of sample_error(a) - sample_error(b) when column i
/// of a and b share the same initial noise, so columns are resampled jointly.
double paired_bootstrap_std_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                  const PointDataset& reference, std::size_t n_boot,
                                  std::uint64_t seed);

std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Number of strict local maxima of a sampled curve; a plateau counts once
/// when both of its neighbours are lower. Endpoints are not counted.
std::size_t count_modes(const std::vector<double>& values);

/// Diffused density of a 1-D dataset on an (alpha, x) grid.
struct DensityGrid {
  std::vector<double> alphas;
  std::vector<double> xs;
  Eigen::MatrixXd density;  // alphas.size() x xs.size()
  std::vector<std::size_t> modes;
};

DensityGrid density_grid(const PointDataset& dataset, const std::vector<double>& alphas,
                         const std::vector<double>& xs);

/// Trapezoid integral of row `row` of the grid over x.
double row_integral(const DensityGrid& grid, Eigen::Index row);

}  // namespace crs
