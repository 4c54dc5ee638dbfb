#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "crs/dataset.hpp"
#include "crs/diffusion.hpp"
#include "crs/error.hpp"
#include "crs/evaluation.hpp"
#include "crs/samplers.hpp"

using namespace crs;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

class ConstantPredictor final : public Predictor {
 public:
  explicit ConstantPredictor(Eigen::VectorXd p) : p_(std::move(p)) {}
  Eigen::Index dim() const override { return p_.size(); }
  using Predictor::predict_data;
  void predict_data(const Eigen::Ref<const Eigen::VectorXd>&, double,
                    Eigen::Ref<Eigen::VectorXd> out) const override {
    out = p_;
  }

 private:
  Eigen::VectorXd p_;
};

std::vector<double> row(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

TEST(SamplerSpec, ParseAndValidate) {
  const auto a = SamplerSpec::parse("ddim:1", {0.01, 0.5, 1.0});
  EXPECT_EQ(a.kind, SamplerKind::kDdim);
  EXPECT_EQ(a.eta, 1.0);
  EXPECT_EQ(a.nfe(), 2u);
  EXPECT_EQ(a.name(), "ddim:1");
  EXPECT_EQ(SamplerSpec::parse("dpmpp2m", {0.1, 0.9}).kind, SamplerKind::kDpmpp2m);
  EXPECT_EQ(SamplerSpec::parse("ddim:0", {0.1, 0.9}).name(), "ddim:0");
  EXPECT_THROW(SamplerSpec::parse("euler", {0.1, 0.9}), ValidationError);
  EXPECT_THROW(SamplerSpec::parse("ddim:x", {0.1, 0.9}), ValidationError);
  EXPECT_THROW(SamplerSpec::parse("ddim:1.5", {0.1, 0.9}), ValidationError);
  EXPECT_THROW(SamplerSpec::parse("ddim:0", {0.1}), ValidationError);
  EXPECT_THROW(SamplerSpec::parse("ddim:0", {0.1, 0.1, 0.9}), ValidationError);
  EXPECT_THROW(SamplerSpec::parse("ddim:0", {-0.1, 0.9}), ValidationError);
}

TEST(SamplerSpec, PermutingTheGridChangesNothing) {
  std::vector<double> grid = linspace(0.02, 1.0, 30);
  const auto sorted = SamplerSpec::make(SamplerKind::kDdim, 0.0, grid);
  std::mt19937_64 gen(1);
  std::shuffle(grid.begin(), grid.end(), gen);
  const auto shuffled = SamplerSpec::make(SamplerKind::kDdim, 0.0, grid);
  EXPECT_EQ(sorted.alphas, shuffled.alphas);
  const auto again = SamplerSpec::make(SamplerKind::kDdim, 0.0, shuffled.alphas);
  EXPECT_EQ(again.alphas, sorted.alphas);
  const PosteriorMeanPredictor pred(builtin_dataset("toy3"));
  EXPECT_EQ(sample(pred, sorted, 50, 3), sample(pred, shuffled, 50, 3));
}

TEST(Ddim, CleanEndpointReturnsPrediction) {
  const PosteriorMeanPredictor pred(builtin_dataset("toy3"));
  const Eigen::VectorXd x = vec({0.37});
  EXPECT_EQ(ddim_step(x, 0.6, 1.0, pred, 0.0), pred.predict_data(x, 0.6));
  Rng rng(1);
  EXPECT_EQ(ddim_step(x, 0.6, 1.0, pred, 1.0, &rng), pred.predict_data(x, 0.6));
  const PosteriorMeanPredictor single{PointDataset(vec({0.4, -0.2}))};
  EXPECT_EQ(ddim_step(vec({3.0, 1.0}), 0.05, 1.0, single, 0.0), vec({0.4, -0.2}));
}

TEST(Ddim, DeterministicUpdateFormula) {
  const PosteriorMeanPredictor pred(builtin_dataset("toy3"));
  const Eigen::VectorXd x = vec({-0.8});
  const double at = 0.3, as = 0.55;
  const Eigen::VectorXd xh = pred.predict_data(x, at);
  const Eigen::VectorXd eh = (x - at * xh) / std::sqrt(1 - at * at);
  const Eigen::VectorXd expect = as * xh + std::sqrt(1 - as * as) * eh;
  EXPECT_NEAR((ddim_step(x, at, as, pred, 0.0) - expect).norm(), 0.0, 1e-15);
  EXPECT_THROW(ddim_step(x, 0.5, 0.5, pred, 0.0), ValidationError);
  EXPECT_THROW(ddim_step(x, 0.6, 0.5, pred, 0.0), ValidationError);
}

TEST(Ddim, StochasticStepPreservesMarginalVariance) {
  // Single point p: from the exact marginal at alpha_t, one eta = 1 step
  // lands on the exact marginal at alpha_s with variance sigma_s^2.
  const double p = 0.7, at = 0.3, as = 0.8;
  const PosteriorMeanPredictor single{PointDataset(vec({p}))};
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  Rng rng(3);
  const int n = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = at * p + std::sqrt(1 - at * at) * normal(gen);
    const double y = ddim_step(vec({x}), at, as, single, 1.0, &rng)[0] - as * p;
    s1 += y;
    s2 += y * y;
  }
  const double mean = s1 / n;
  const double var = (s2 - n * mean * mean) / (n - 1);
  const double target = 1 - as * as;
  EXPECT_LE(std::abs(var - target), 3 * target * std::sqrt(2.0 / (n - 1)));
  EXPECT_LE(std::abs(mean), 3 * std::sqrt(target / n));
}

TEST(Dpm, FirstStepMatchesDdim) {
  const PosteriorMeanPredictor pred(builtin_dataset("toy3"));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double at = 0.9 * u(gen) + 0.01;
    const double as = at + (0.999 - at) * u(gen);
    const Eigen::VectorXd x = vec({4 * u(gen) - 2});
    const auto step = dpmpp2m_step(x, at, as, pred, std::nullopt);
    EXPECT_NEAR(step.x[0], ddim_step(x, at, as, pred, 0.0)[0], 1e-12);
    EXPECT_EQ(step.carry.x_hat, pred.predict_data(x, at));
    EXPECT_NEAR(step.carry.lambda, std::log(at / std::sqrt(1 - at * at)), 1e-14);
  }
}

TEST(Dpm, ConstantPredictorReachesItsValue) {
  const ConstantPredictor pred(vec({0.25, -3.0}));
  for (auto kind : {SamplerKind::kDpmpp2m, SamplerKind::kDdim}) {
    const auto spec = SamplerSpec::make(kind, 0.0, linspace(0.01, 1.0, 12));
    const auto out = sample(pred, spec, 20, 5);
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
      EXPECT_NEAR(out(0, i), 0.25, 1e-12);
      EXPECT_NEAR(out(1, i), -3.0, 1e-12);
    }
  }
}

TEST(Dpm, SecondOrderConvergence) {
  // Gaussian prior: exact probability-flow map is known in closed form.
  const GaussianPriorPredictor pred(vec({0.5}), 0.25);
  Eigen::MatrixXd start(1, 5);
  start << -2.0, -0.5, 0.0, 0.8, 2.5;
  const double lo = 0.05, hi = 0.95;
  std::vector<double> log_n, log_err;
  for (std::size_t nfe : {8u, 16u, 32u, 64u}) {
    const auto spec = SamplerSpec::make(SamplerKind::kDpmpp2m, 0.0, linspace(lo, hi, nfe + 1));
    const auto out = sample_from(pred, spec, start, 0);
    double err = 0;
    for (Eigen::Index i = 0; i < start.cols(); ++i) {
      const double exact = pred.exact_flow(start.col(i), lo, hi)[0];
      err = std::max(err, std::abs(out(0, i) - exact));
    }
    log_n.push_back(std::log(static_cast<double>(nfe)));
    log_err.push_back(std::log(err));
  }
  // Least-squares slope of log error against log NFE.
  const double mn = std::accumulate(log_n.begin(), log_n.end(), 0.0) / 4;
  const double me = std::accumulate(log_err.begin(), log_err.end(), 0.0) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (log_n[i] - mn) * (log_err[i] - me);
    sxx += (log_n[i] - mn) * (log_n[i] - mn);
  }
  EXPECT_NEAR(-sxy / sxx, 2.0, 0.3);
}

TEST(Sample, SingleStepOnPointMass) {
  const PosteriorMeanPredictor single{PointDataset(vec({1.5}))};
  const auto spec = SamplerSpec::make(SamplerKind::kDdim, 0.0, {0.01, 1.0});
  const auto out = sample(single, spec, 100, 1);
  for (Eigen::Index i = 0; i < out.cols(); ++i) EXPECT_EQ(out(0, i), 1.5);
}

TEST(Sample, TwoPointSplitsEvenly) {
  const PosteriorMeanPredictor pred(builtin_dataset("two-point"));
  const auto spec = SamplerSpec::make(SamplerKind::kDdim, 0.0, linspace(0.01, 1.0, 101));
  const std::size_t n = 10000;
  const auto out = sample(pred, spec, n, 6);
  std::size_t plus = 0;
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const double x = out(0, i);
    EXPECT_LE(std::min(std::abs(x - 1), std::abs(x + 1)), 1e-3) << x;
    plus += x > 0;
  }
  const double frac = static_cast<double>(plus) / static_cast<double>(n);
  EXPECT_LE(std::abs(frac - 0.5), 3 * std::sqrt(0.25 / static_cast<double>(n)));
}

TEST(Sample, DeterministicAndWorkerIndependent) {
  const PosteriorMeanPredictor pred(builtin_dataset("grid-mixture:2"));
  for (const char* name : {"ddim:0", "ddim:1", "dpmpp2m"}) {
    const auto spec = SamplerSpec::parse(name, linspace(0.02, 1.0, 9));
    const auto a = sample(pred, spec, 300, 11);
    EXPECT_EQ(a, sample(pred, spec, 300, 11)) << name;
    EXPECT_EQ(a, sample(pred, spec, 300, 11, 3)) << name;
    EXPECT_NE(a, sample(pred, spec, 300, 12)) << name;
  }
  EXPECT_EQ(initial_noise(2, 10, 4), initial_noise(2, 10, 4));
}

TEST(Sample, StochasticDdimMatchesMarginalsOfPointMass) {
  // eta = 1 keeps every intermediate marginal exact for a point mass, so the
  // terminal mean at alpha = 0.9 is 0.9 p with variance 0.19.
  const PosteriorMeanPredictor single{PointDataset(vec({-1.0}))};
  for (std::size_t nfe : {2u, 5u}) {
    const auto spec = SamplerSpec::make(SamplerKind::kDdim, 1.0, linspace(0.0, 0.9, nfe + 1));
    const auto out = sample(single, spec, 50000, 8);
    const double mean = out.row(0).mean();
    const double var = (out.row(0).array() - mean).square().sum() / 49999.0;
    EXPECT_LE(std::abs(mean + 0.9), 3 * std::sqrt(0.19 / 50000));
    EXPECT_LE(std::abs(var - 0.19), 3 * 0.19 * std::sqrt(2.0 / 49999));
  }
}

TEST(Sample, DdimAndDpmShareTheFlowLimit) {
  const PosteriorMeanPredictor pred(builtin_dataset("two-point"));
  const auto noise = initial_noise(1, 2000, 21);
  auto run = [&](SamplerKind kind, std::size_t nfe) {
    return row(sample_from(pred, SamplerSpec::make(kind, 0.0, linspace(0.01, 1.0, nfe + 1)), noise, 0));
  };
  const auto ddim = run(SamplerKind::kDdim, 1024);
  const auto dpm512 = run(SamplerKind::kDpmpp2m, 512);
  const auto dpm1024 = run(SamplerKind::kDpmpp2m, 1024);
  EXPECT_LE(wasserstein_1d(ddim, dpm1024), 1e-3);
  EXPECT_LE(wasserstein_1d(ddim, dpm512), 1e-3);
}
