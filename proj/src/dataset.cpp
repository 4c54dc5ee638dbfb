#include "crs/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "crs/error.hpp"
#include "crs/table_io.hpp"

namespace crs {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* begin = s.c_str() + b;
  char* end = nullptr;
  v = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

}  // namespace

PointDataset::PointDataset(Eigen::MatrixXd points, std::vector<int> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  detail::require(points_.rows() >= 1, "dataset: dimension must be >= 1");
  detail::require(points_.cols() >= 1, "dataset: need at least one point");
  detail::require(points_.allFinite(), "dataset: points must be finite");
  detail::require(labels_.empty() || labels_.size() == static_cast<std::size_t>(points_.cols()),
                  "dataset: label count does not match point count");
}

PointDataset PointDataset::from_rows(const std::vector<std::vector<double>>& rows) {
  detail::require(!rows.empty(), "dataset: need at least one point");
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t n = 0; n < rows.size(); ++n) {
    detail::require(static_cast<Eigen::Index>(rows[n].size()) == d,
                    "dataset: rows have inconsistent dimension");
    for (Eigen::Index k = 0; k < d; ++k) pts(k, static_cast<Eigen::Index>(n)) = rows[n][static_cast<std::size_t>(k)];
  }
  return PointDataset(std::move(pts));
}

Eigen::VectorXd PointDataset::mean() const { return points_.rowwise().mean(); }

Eigen::MatrixXd PointDataset::covariance() const {
  const Eigen::MatrixXd centered = points_.colwise() - mean();
  return centered * centered.transpose() / static_cast<double>(size());
}

PointDataset PointDataset::scaled(double factor) const {
  return PointDataset(points_ * factor, labels_);
}

PointDataset PointDataset::transformed(const Eigen::MatrixXd& rotation) const {
  detail::require(rotation.rows() == dim() && rotation.cols() == dim(),
                  "dataset: transform has wrong shape");
  return PointDataset(rotation * points_, labels_);
}

PointDataset load_dataset_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  long label_col = -1;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, ',');
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_double(fields[i], values[i]);
    if (!numeric) {
      if (!first) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": non-numeric row");
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "label") label_col = static_cast<long>(i);
      }
      first = false;
      continue;
    }
    first = false;
    if (label_col >= 0) {
      const auto lc = static_cast<std::size_t>(label_col);
      detail::require(lc < values.size(), "dataset: missing label column");
      labels.push_back(static_cast<int>(values[lc]));
      values.erase(values.begin() + label_col);
    }
    rows.push_back(std::move(values));
  }
  detail::require(!rows.empty(), path.string() + ": no data rows");
  auto ds = PointDataset::from_rows(rows);
  return labels.empty() ? ds : PointDataset(ds.points(), std::move(labels));
}

PointDataset builtin_dataset(const std::string& name) {
  if (name == "toy3") return PointDataset::from_rows({{-1.0}, {0.2}, {1.0}});
  if (name == "two-point") return PointDataset::from_rows({{-1.0}, {1.0}});
  if (name.rfind("grid-mixture:", 0) == 0) {
    double kd = 0.0;
    const std::string arg = name.substr(13);
    detail::require(parse_double(arg, kd) && kd >= 1.0 && kd == std::floor(kd) && kd <= 1000,
                    "grid-mixture:<k> needs an integer k in [1, 1000]");
    const auto k = static_cast<Eigen::Index>(kd);
    Eigen::MatrixXd pts(2, k * k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double xi = k == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(k - 1);
        const double xj = k == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(k - 1);
        pts(0, i * k + j) = xi;
        pts(1, i * k + j) = xj;
      }
    }
    return PointDataset(std::move(pts));
  }
  if (name.rfind("point:", 0) == 0) {
    std::vector<double> coords;
    for (const auto& f : split(name.substr(6), ',')) {
      double v = 0.0;
      detail::require(parse_double(f, v), "point:<x1>,<x2>,... has a non-numeric coordinate");
      coords.push_back(v);
    }
    return PointDataset::from_rows({coords});
  }
  throw ValidationError("unknown built-in dataset '" + name + "'");
}

PointDataset resolve_dataset(const std::string& spec) {
  if (spec == "toy3" || spec == "two-point" || spec.rfind("grid-mixture:", 0) == 0 ||
      spec.rfind("point:", 0) == 0) {
    return builtin_dataset(spec);
  }
  if (!std::filesystem::exists(spec)) {
    throw ValidationError("dataset '" + spec + "' is neither a built-in name nor a file");
  }
  return load_dataset_csv(spec);
}

}  // namespace crs
