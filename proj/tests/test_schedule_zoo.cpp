#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "crs/error.hpp"
#include "crs/schedule_zoo.hpp"

using namespace crs;

TEST(LinearSchedule, RecursionValues) {
  const auto s = zoo::linear_schedule();
  ASSERT_EQ(s.size(), 1001u);
  EXPECT_EQ(s.alpha(0.0), 1.0);
  EXPECT_NEAR(s.alpha(0.001), std::sqrt(1 - 1e-4), 1e-15);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s.knots_alpha()[i], s.knots_alpha()[i - 1]);
}

TEST(LinearSchedule, EndpointMatchesProductInLogSpace) {
  // Independent accumulation: sum of log factors instead of a running product.
  double log_alpha = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double beta = 1e-4 + (0.02 - 1e-4) * (i - 1) / 999.0;
    log_alpha += 0.5 * std::log1p(-beta);
  }
  EXPECT_NEAR(zoo::linear_schedule().alpha(1.0), std::exp(log_alpha), 1e-12);
}

TEST(ShiftedCosine, MidpointAndLimits) {
  EXPECT_NEAR(zoo::shifted_cosine_alpha(64, 0.5), std::sqrt(0.5), 1e-15);
  EXPECT_GT(zoo::shifted_cosine_alpha(64, 0.0), 1 - 1e-12);
  EXPECT_LT(zoo::shifted_cosine_alpha(64, 1.0), 1e-6);
  // Larger resolution shifts toward more noise at the same t.
  EXPECT_LT(zoo::shifted_cosine_alpha(256, 0.5), zoo::shifted_cosine_alpha(64, 0.5));
  // Direct formula at an interior point.
  const double t = 0.3, d = 128;
  const double lambda = -2 * std::log(std::tan(std::numbers::pi * t / 2)) + 2 * std::log(64 / d);
  EXPECT_NEAR(zoo::shifted_cosine_alpha(128, t), std::sqrt(1 / (1 + std::exp(-lambda))), 1e-14);
}

TEST(ShiftedCosine, SchedulesAreStrictlyDecreasing) {
  for (int d : {32, 64, 256}) {
    const auto s = zoo::shifted_cosine_schedule(d);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s.knots_alpha()[i], s.knots_alpha()[i - 1]);
  }
}

TEST(ShiftedCosine, SamplingRescaleBounds) {
  const auto s = zoo::shifted_cosine_sampling_schedule(64);
  EXPECT_EQ(s.alpha(1.0), 0.01);
  EXPECT_EQ(s.alpha(0.0), 1.0);
  EXPECT_NEAR(s.alpha(0.5), 0.01 + 0.99 * std::sqrt(0.5), 1e-12);
}

TEST(Edm, SigmaEndpointsAndRhoOne) {
  const zoo::EdmParams p;
  EXPECT_NEAR(zoo::edm_sigma(p, 0.0), 0.002, 1e-15);
  EXPECT_NEAR(zoo::edm_sigma(p, 1.0), 80.0, 1e-12);
  const zoo::EdmParams lin{1.0, 3.0, 1.0};
  EXPECT_NEAR(zoo::edm_sigma(lin, 0.5), 2.0, 1e-15);
}

TEST(Edm, ScheduleList) {
  const auto a = zoo::edm_schedule({}, 18);
  ASSERT_EQ(a.size(), 19u);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_NEAR(a[18], 1 / std::sqrt(6401.0), 1e-15);
  EXPECT_NEAR(a[18], 0.0125, 1e-5);
  EXPECT_NEAR(zoo::edm_alpha({}, 0.0), 0.999998, 5e-7);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i], a[i - 1]);
  EXPECT_THROW(zoo::edm_schedule({}, 0), ValidationError);
}

TEST(Edm, Conversion) {
  EXPECT_NEAR(zoo::alpha_from_edm_sigma(1.0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(zoo::alpha_from_edm_sigma(80.0), 0.012499, 1e-6);
  for (double s : {1e-3, 0.002, 0.05, 0.5, 1.0, 7.0, 80.0}) {
    const double back = zoo::sigma_from_alpha(zoo::alpha_from_edm_sigma(s));
    // alpha = 1 - s^2/2 keeps only ~1e-16 / s^2 relative information about s.
    const double tol = std::max(1e-12, 4e-16 / (s * s));
    EXPECT_NEAR(back / s, 1.0, tol) << "sigma " << s;
    const double a = zoo::alpha_from_edm_sigma(s);
    EXPECT_NEAR(zoo::log_snr(a), -2 * std::log(s), 1e-10);
  }
  EXPECT_THROW(zoo::alpha_from_edm_sigma(0.0), ValidationError);
  EXPECT_THROW(zoo::alpha_from_edm_sigma(-1.0), ValidationError);
}

TEST(Zoo, NamesResolve) {
  EXPECT_TRUE(zoo::is_zoo_name("linear"));
  EXPECT_TRUE(zoo::is_zoo_name("shifted-cosine:64"));
  EXPECT_TRUE(zoo::is_zoo_name("edm:0.002,80,7"));
  EXPECT_FALSE(zoo::is_zoo_name("crs"));
  const auto lin = zoo::sampling_alphas("linear", 10);
  EXPECT_EQ(lin.size(), 11u);
  EXPECT_EQ(lin.front(), 1.0);
  const auto edm = zoo::sampling_alphas("edm:0.002,80,7", 5);
  EXPECT_EQ(edm, zoo::edm_schedule({}, 5));
  const auto cos = zoo::sampling_alphas("shifted-cosine:64", 4);
  EXPECT_NEAR(cos[2], 0.01 + 0.99 * std::sqrt(0.5), 1e-12);
  EXPECT_THROW(zoo::sampling_alphas("cosine", 4), ValidationError);
  EXPECT_THROW(zoo::sampling_alphas("shifted-cosine:x", 4), ValidationError);
  EXPECT_THROW(zoo::sampling_alphas("edm:1,2", 4), ValidationError);
  EXPECT_THROW(zoo::sampling_alphas("edm:5,2,7", 4), ValidationError);
}
