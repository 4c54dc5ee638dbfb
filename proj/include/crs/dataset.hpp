#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace crs {

/// Empirical data distribution: N points of dimension d, stored one point
/// per column.
class PointDataset {
 public:
  explicit PointDataset(Eigen::MatrixXd points, std::vector<int> labels = {});

  /// One inner vector per point.
  static PointDataset from_rows(const std::vector<std::vector<double>>& rows);

  Eigen::Index size() const { return points_.cols(); }
  Eigen::Index dim() const { return points_.rows(); }
  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::MatrixXd::ConstColXpr point(Eigen::Index n) const { return points_.col(n); }
  const std::vector<int>& labels() const { return labels_; }

  Eigen::VectorXd mean() const;
  /// Population covariance (divides by N).
  Eigen::MatrixXd covariance() const;

  /// The same points multiplied by `factor` (e.g. -1 for the mirrored set).
  PointDataset scaled(double factor) const;
  /// Points mapped through x -> rotation * x.
  PointDataset transformed(const Eigen::MatrixXd& rotation) const;

 private:
  Eigen::MatrixXd points_;
  std::vector<int> labels_;
};

/// CSV with one point per row; an optional header row is skipped. A column
/// named "label" (in the header) is read as the integer class label.
PointDataset load_dataset_csv(const std::filesystem::path& path);

/// Built-ins: "toy3" = {-1, 0.2, 1}; "two-point" = {-1, +1};
/// "grid-mixture:<k>" = k x k grid on [-1,1]^2; "point:<x1>,<x2>,..." = a
/// single point.
PointDataset builtin_dataset(const std::string& name);

/// Built-in name, or otherwise a CSV path.
PointDataset resolve_dataset(const std::string& spec);

}  // namespace crs
