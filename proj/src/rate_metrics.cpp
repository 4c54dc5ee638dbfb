#include "crs/rate_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "crs/diffusion.hpp"
#include "crs/error.hpp"
#include "crs/noise_schedule.hpp"
#include "crs/parallel.hpp"
#include "crs/rng.hpp"

namespace crs {
namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr double kSymmetryTolerance = 1e-8;
constexpr std::size_t kMomentBatches = 8;

void check_covariance(const Eigen::MatrixXd& s, const char* name) {
  detail::require(s.rows() == s.cols(), std::string(name) + " is not square");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  detail::require((s - s.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance * scale,
                  std::string(name) + " is not symmetric");
}

// Symmetric PSD square root with eigenvalues clamped at zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s, const char* name) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (lam.minCoeff() < -kPsdTolerance * scale) {
    throw ValidationError(std::string(name) + " is not positive semi-definite");
  }
  return eig.eigenvectors() * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

void check_decreasing_grid(const std::vector<double>& alphas) {
  detail::require(alphas.size() >= 2, "alpha grid needs at least 2 entries");
  detail::require(alphas.front() <= 1.0 && alphas.back() > 0.0, "alpha grid must lie in (0,1]");
  for (std::size_t t = 1; t < alphas.size(); ++t) {
    detail::require(alphas[t] < alphas[t - 1], "alpha grid must be strictly decreasing");
  }
}

// Moment sums of one batch: per step, sum of (f - shift) and of its outer
// products.
struct MomentSums {
  std::vector<Eigen::VectorXd> s1;
  std::vector<Eigen::MatrixXd> s2;
  std::size_t count = 0;

  MomentSums(std::size_t steps, Eigen::Index f)
      : s1(steps, Eigen::VectorXd::Zero(f)), s2(steps, Eigen::MatrixXd::Zero(f, f)) {}

  void add(const MomentSums& o) {
    for (std::size_t t = 0; t < s1.size(); ++t) {
      s1[t] += o.s1[t];
      s2[t] += o.s2[t];
    }
    count += o.count;
  }
};

MomentTrajectory finish_moments(const std::vector<double>& alphas, const MomentSums& sums,
                                const std::vector<Eigen::VectorXd>& shift) {
  MomentTrajectory m;
  m.alphas = alphas;
  const double n = static_cast<double>(sums.count);
  for (std::size_t t = 0; t < alphas.size(); ++t) {
    const Eigen::VectorXd mean_offset = sums.s1[t] / n;
    Eigen::MatrixXd cov = (sums.s2[t] - n * mean_offset * mean_offset.transpose()) / (n - 1.0);
    cov = 0.5 * (cov + cov.transpose());
    m.means.push_back(shift[t] + mean_offset);
    m.covariances.push_back(std::move(cov));
  }
  return m;
}

struct MomentRun {
  MomentTrajectory total;
  std::vector<MomentTrajectory> batches;
};

MomentRun run_moments(const PointDataset& dataset, const std::vector<double>& alphas,
                      std::size_t n_samples, std::uint64_t seed, const FeatureMap& feature_map,
                      std::size_t workers, std::size_t n_batches) {
  check_decreasing_grid(alphas);
  const auto d = dataset.dim();
  auto features = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return feature_map ? feature_map(x) : x;
  };
  const Eigen::VectorXd data_mean = dataset.mean();
  const Eigen::Index f = features(alphas.front() * data_mean).size();
  detail::require(f >= 1, "feature map returned an empty vector");
  detail::require(n_samples >= static_cast<std::size_t>(f) + 2,
                  "singular covariance: need at least dim + 2 samples");

  std::vector<Eigen::VectorXd> shift;
  shift.reserve(alphas.size());
  for (double a : alphas) shift.push_back(features(a * data_mean));

  const std::size_t steps = alphas.size();
  const Rng root(seed);
  const auto plan = detail::ChunkPlan::make(n_samples, 1024);
  std::vector<MomentSums> batch(n_batches, MomentSums(steps, f));

  auto run_chunk = [&](std::size_t c) {
    std::vector<MomentSums> local(n_batches, MomentSums(steps, f));
    Eigen::VectorXd x(d);
    Eigen::VectorXd z(d);
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      auto& acc = local[i % n_batches];
      Rng rng = root.split(i);
      x = dataset.point(static_cast<Eigen::Index>(i) % dataset.size());
      if (alphas.front() < 1.0) {
        rng.fill_normal(z);
        x = alphas.front() * x + sigma_of(alphas.front()) * z;
      }
      for (std::size_t t = 0; t < steps; ++t) {
        if (t > 0) {
          const double beta = alphas[t] / alphas[t - 1];
          const double delta =
              std::sqrt((alphas[t - 1] - alphas[t]) * (alphas[t - 1] + alphas[t])) / alphas[t - 1];
          rng.fill_normal(z);
          x = beta * x + delta * z;
        }
        const Eigen::VectorXd y = features(x) - shift[t];
        acc.s1[t] += y;
        acc.s2[t].noalias() += y * y.transpose();
      }
      ++acc.count;
    }
    return local;
  };

  // Chunks run in waves of `workers`; each wave is merged in chunk order.
  const std::size_t wave = std::max<std::size_t>(workers, 1);
  for (std::size_t first = 0; first < plan.count(); first += wave) {
    const std::size_t count = std::min(wave, plan.count() - first);
    std::vector<std::vector<MomentSums>> results(count);
    detail::for_each_chunk(count, workers, [&](std::size_t k) { results[k] = run_chunk(first + k); });
    for (auto& r : results) {
      for (std::size_t b = 0; b < n_batches; ++b) batch[b].add(r[b]);
    }
  }

  MomentSums total(steps, f);
  for (const auto& b : batch) total.add(b);
  MomentRun run;
  run.total = finish_moments(alphas, total, shift);
  for (const auto& b : batch) {
    if (b.count >= static_cast<std::size_t>(f) + 2) run.batches.push_back(finish_moments(alphas, b, shift));
  }
  if (run.batches.size() < n_batches) run.batches.clear();
  return run;
}

RateTable increasing_table(const std::vector<double>& decreasing_alphas,
                           const std::vector<double>& values) {
  return RateTable(std::vector<double>(decreasing_alphas.rbegin(), decreasing_alphas.rend()),
                   std::vector<double>(values.rbegin(), values.rend()));
}

std::vector<double> rate_values(const MomentTrajectory& m) {
  const std::size_t steps = m.alphas.size();
  std::vector<double> v(steps);
  for (std::size_t t = 0; t + 1 < steps; ++t) {
    v[t] = frechet_distance(m.means[t], m.covariances[t], m.means[t + 1], m.covariances[t + 1]) /
           (m.alphas[t] - m.alphas[t + 1]);
  }
  v[steps - 1] = v[steps - 2];
  return v;
}

enum class Measure { kData, kNoise };

RateEstimate prediction_rate(const PointDataset& dataset, const Predictor& predictor,
                             const VxConfig& config, std::uint64_t seed, Measure measure) {
  config.validate();
  detail::require(predictor.dim() == dataset.dim(), "predictor and dataset dimensions differ");
  const std::size_t steps = config.steps;
  const double a_s = config.alpha_start;
  const double d_alpha = (config.alpha_start - config.alpha_end) / static_cast<double>(steps);
  std::vector<double> alphas(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) alphas[t] = a_s - d_alpha * static_cast<double>(t);
  alphas.back() = config.alpha_end;

  // With alpha_s = 1 the noise prediction is undefined at t = 0, so the
  // first noise-measure interval is skipped.
  const bool skip_first = measure == Measure::kNoise && a_s >= 1.0;
  detail::require(!skip_first || steps >= 2, "noise-measure rate needs at least 2 steps");

  const auto d = dataset.dim();
  const auto n_points = static_cast<std::size_t>(dataset.size());
  Rng perm_rng(seed, 1);
  const auto perm = perm_rng.permutation(n_points);
  const Rng root(seed);
  const auto plan = detail::ChunkPlan::make(config.samples, 256);

  struct Sums {
    std::vector<double> s1, s2;
  };
  std::vector<Sums> chunks(plan.count());
  detail::for_each_chunk(plan.count(), config.workers, [&](std::size_t c) {
    Sums acc{std::vector<double>(steps + 1, 0.0), std::vector<double>(steps + 1, 0.0)};
    Eigen::VectorXd x(d), z(d), y(d), y_prev(d), pred(d);
    auto observe = [&](double a, Eigen::VectorXd& out) {
      predictor.predict_data(x, a, pred);
      if (measure == Measure::kData) {
        out = pred;
      } else {
        out = (x - a * pred) / sigma_of(a);
      }
    };
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      Rng rng = root.split(i);
      const auto x0 = dataset.point(static_cast<Eigen::Index>(perm[i % n_points]));
      if (a_s >= 1.0) {
        x = x0;
        y_prev = x0;
      } else {
        rng.fill_normal(z);
        x = a_s * x0 + sigma_of(a_s) * z;
        observe(a_s, y_prev);
      }
      for (std::size_t t = 1; t <= steps; ++t) {
        const double a0 = alphas[t - 1];
        const double a1 = alphas[t];
        rng.fill_normal(z);
        x = (a1 / a0) * x + (std::sqrt((a0 - a1) * (a0 + a1)) / a0) * z;
        observe(a1, y);
        if (!(skip_first && t == 1)) {
          const double d2 = (y - y_prev).squaredNorm();
          acc.s1[t] += d2;
          acc.s2[t] += d2 * d2;
        }
        std::swap(y, y_prev);
      }
    }
    chunks[c] = std::move(acc);
  });

  std::vector<double> s1(steps + 1, 0.0), s2(steps + 1, 0.0);
  for (const auto& c : chunks) {
    for (std::size_t t = 0; t <= steps; ++t) {
      s1[t] += c.s1[t];
      s2[t] += c.s2[t];
    }
  }
  const double n = static_cast<double>(config.samples);
  std::vector<double> v(steps + 1, 0.0), se(steps + 1, 0.0);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double mean = s1[t] / n;
    const double var = n > 1.0 ? std::max(0.0, (s2[t] / n - mean * mean) * n / (n - 1.0)) : 0.0;
    const double se_mean = std::sqrt(var / n);
    v[t] = std::sqrt(mean / d_alpha);
    se[t] = v[t] > 0.0 ? se_mean / (2.0 * d_alpha * v[t]) : std::sqrt(se_mean / d_alpha);
  }
  if (skip_first) {
    v[1] = v[2];
    se[1] = se[2];
  }
  v[0] = v[1];
  se[0] = se[1];

  RateEstimate est{increasing_table(alphas, v), std::vector<double>(se.rbegin(), se.rend()), {}, {}};
  est.metadata = {{"metric", measure == Measure::kData ? "v_x" : "v_eps"},
                  {"config", config.to_json()},
                  {"seed", seed}};
  return est;
}

}  // namespace

void VxConfig::validate() const {
  detail::require(steps >= 2, "VxConfig: T must be >= 2");
  detail::require(samples >= 1, "VxConfig: S must be >= 1");
  detail::require(alpha_end > 0.0 && alpha_end < alpha_start && alpha_start <= 1.0,
                  "VxConfig: need 0 < alpha_e < alpha_s <= 1");
}

nlohmann::json VxConfig::to_json() const {
  return {{"T", steps}, {"S", samples}, {"alpha_s", alpha_start}, {"alpha_e", alpha_end}};
}

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& sigma1,
                        const Eigen::VectorXd& mu2, const Eigen::MatrixXd& sigma2) {
  detail::require(mu1.size() == mu2.size() && sigma1.rows() == mu1.size() &&
                      sigma2.rows() == mu2.size(),
                  "frechet_distance: dimension mismatch");
  check_covariance(sigma1, "sigma1");
  check_covariance(sigma2, "sigma2");
  const Eigen::MatrixXd root1 = psd_sqrt(sigma1, "sigma1");
  // psd_sqrt(sigma2) is only used to validate the second argument.
  (void)psd_sqrt(sigma2, "sigma2");
  Eigen::MatrixXd inner = root1 * sigma2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  const double trace_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu1 - mu2).squaredNorm() + sigma1.trace() + sigma2.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, value);
}

std::vector<double> power_alpha_grid(std::size_t steps, double power) {
  detail::require(steps >= 1, "alpha grid needs at least one step");
  detail::require(power > 0.0, "alpha grid exponent must be positive");
  std::vector<double> alphas(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) {
    alphas[t] = 1.0 - std::pow(static_cast<double>(t) / static_cast<double>(steps), power);
  }
  return alphas;
}

MomentTrajectory forward_moments(const PointDataset& dataset, const std::vector<double>& alphas,
                                 std::size_t n_samples, std::uint64_t seed,
                                 const FeatureMap& feature_map, std::size_t workers) {
  return run_moments(dataset, alphas, n_samples, seed, feature_map, workers, 1).total;
}

RateTable rate_from_moments(const MomentTrajectory& moments) {
  return increasing_table(moments.alphas, rate_values(moments));
}

RateEstimate compute_v_fid(const PointDataset& dataset, const std::vector<double>& alphas,
                           std::size_t n_samples, std::uint64_t seed, const FeatureMap& feature_map,
                           std::size_t workers) {
  auto run = run_moments(dataset, alphas, n_samples, seed, feature_map, workers, kMomentBatches);
  const auto v = rate_values(run.total);
  RateEstimate est{increasing_table(alphas, v), {}, {}, {}};
  if (!run.batches.empty()) {
    // Batch-means standard error over the interleaved sample batches.
    const auto k = static_cast<double>(run.batches.size());
    std::vector<std::vector<double>> per_batch;
    for (const auto& b : run.batches) per_batch.push_back(rate_values(b));
    std::vector<double> se(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) {
      double mean = 0.0;
      for (const auto& pb : per_batch) mean += pb[t] / k;
      double ss = 0.0;
      for (const auto& pb : per_batch) ss += (pb[t] - mean) * (pb[t] - mean);
      se[t] = std::sqrt(ss / (k - 1.0) / k);
    }
    est.std_error.assign(se.rbegin(), se.rend());
  } else {
    est.warnings.push_back("too few samples per batch for standard errors");
  }
  est.metadata = {{"metric", "v_fid"},
                  {"n_samples", n_samples},
                  {"grid_size", alphas.size()},
                  {"feature_map", feature_map ? "custom" : "identity"},
                  {"seed", seed}};
  return est;
}

RateEstimate compute_v_x(const PointDataset& dataset, const Predictor& predictor,
                         const VxConfig& config, std::uint64_t seed) {
  return prediction_rate(dataset, predictor, config, seed, Measure::kData);
}

RateEstimate compute_v_eps(const PointDataset& dataset, const Predictor& predictor,
                           const VxConfig& config, std::uint64_t seed) {
  return prediction_rate(dataset, predictor, config, seed, Measure::kNoise);
}

double klub_weight(double alpha) {
  detail::require(alpha >= 0.0 && alpha < 1.0, "KLUB weight needs alpha in [0,1)");
  return std::sqrt(alpha) / (std::numbers::sqrt2 * (1.0 - alpha) * (1.0 + alpha));
}

RateEstimate compute_v_klub(const PointDataset& dataset, const Predictor& predictor,
                            const VxConfig& config, std::uint64_t seed) {
  return klub_from_v_x(compute_v_x(dataset, predictor, config, seed));
}

RateEstimate klub_from_v_x(const RateEstimate& vx) {
  std::vector<double> alphas, values, se;
  bool dropped = false;
  for (std::size_t i = 0; i < vx.rate.size(); ++i) {
    const double a = vx.rate.alphas()[i];
    if (a >= 1.0) {
      dropped = true;
      continue;
    }
    const double w = klub_weight(a);
    alphas.push_back(a);
    values.push_back(w * vx.rate.values()[i]);
    se.push_back(w * vx.std_error[i]);
  }
  detail::require(alphas.size() >= 2, "KLUB table needs at least 2 knots below alpha = 1");
  RateEstimate est{RateTable(std::move(alphas), std::move(values)), std::move(se), vx.warnings,
                   vx.metadata};
  est.metadata["metric"] = "v_klub";
  if (dropped) {
    est.warnings.push_back("v_klub: knot at alpha = 1 dropped (sigma = 0 makes the weight singular)");
  }
  return est;
}

}  // namespace crs
