#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "regflood/distributions.hpp"
#include "regflood/error.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

TEST(GpCdf, ExponentialCase) {
  EXPECT_NEAR(gp_cdf({0, 1, 0}, 1.0), 1.0 - std::exp(-1.0), 1e-15);
}

TEST(GpCdf, MatchesRootOfQuantileEquation) {
  // Independent oracle: bracket-and-solve F(x) = 0.9 on the defining formula.
  const auto f = [](double x) { return 1.0 - std::pow(1.0 + 0.2 * x, -5.0) - 0.9; };
  const auto [lo, hi] =
      boost::math::tools::bisect(f, 0.0, 10.0, boost::math::tools::eps_tolerance<double>(52));
  EXPECT_NEAR(0.5 * (lo + hi), 2.924466, 1e-6);
  EXPECT_NEAR(gp_cdf({0, 1, 0.2}, 2.924466), 0.9, 1e-7);
}

TEST(GpCdf, BoundedSupport) {
  const GpParams p{5, 2, -0.5};
  EXPECT_DOUBLE_EQ(gp_upper_endpoint(p), 9.0);
  EXPECT_DOUBLE_EQ(gp_cdf(p, 9.0), 1.0);
  EXPECT_DOUBLE_EQ(gp_cdf(p, 12.0), 1.0);
  EXPECT_DOUBLE_EQ(gp_cdf(p, 4.0), 0.0);
}

TEST(GpCdf, RejectsNonFinite) {
  EXPECT_THROW(gp_cdf({0, 1, 0}, std::nan("")), InputError);
  EXPECT_THROW(gp_cdf({0, -1, 0}, 1.0), InputError);
}

TEST(GpQuantile, Examples) {
  EXPECT_NEAR(gp_quantile({0, 1, 0}, 0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(gp_quantile({0, 1, 0.2}, 0.9), 5.0 * (std::pow(10.0, 0.2) - 1.0), 1e-13);
  EXPECT_DOUBLE_EQ(gp_quantile({10, 2, 0.1}, 0.0), 10.0);
  EXPECT_THROW(gp_quantile({0, 1, 0}, 1.0), InputError);
  EXPECT_THROW(gp_quantile({0, 1, 0}, -0.1), InputError);
}

TEST(GpQuantile, RoundTripOverParameterGrid) {
  for (double xi : {-0.45, -0.2, -1e-9, 0.0, 1e-9, 0.1, 0.3, 0.8}) {
    for (double sigma : {0.01, 1.0, 250.0}) {
      const GpParams p{3.0, sigma, xi};
      for (double u = 0.001; u < 1.0; u += 0.0417) {
        EXPECT_NEAR(gp_cdf(p, gp_quantile(p, u)), u, 1e-10 * std::max(1.0, u))
            << "xi " << xi << " sigma " << sigma << " p " << u;
      }
    }
  }
}

TEST(GpQuantile, ShapeContinuity) {
  for (double u = 0.01; u < 1.0; u += 0.049) {
    EXPECT_LT(std::abs(gp_quantile({0, 1, 1e-9}, u) - gp_quantile({0, 1, 0}, u)), 1e-6);
  }
}

TEST(GpLogpdf, Examples) {
  EXPECT_NEAR(gp_logpdf({0, 1, 0}, 2.0), -2.0, 1e-15);
  EXPECT_NEAR(gp_logpdf({0, 1, 0.2}, 1.0), -6.0 * std::log(1.2), 1e-14);
  EXPECT_NEAR(gp_logpdf({0, 1, 0.2}, 1.0), -1.093929, 1e-6);
  EXPECT_EQ(gp_logpdf({5, 1, 0.1}, 4.0), kNegInf);
  EXPECT_EQ(gp_logpdf({0, -1, 0.1}, 1.0), kNegInf);
  EXPECT_EQ(gp_logpdf({0, 1, -0.5}, 2.5), kNegInf);
}

TEST(GpLogpdf, MatchesFiniteDifferenceOfCdf) {
  const GpParams p{1.0, 2.0, 0.2};
  for (double x : {1.3, 2.0, 5.0, 11.0}) {
    const double h = 1e-5;
    const double fd = (gp_cdf(p, x + h) - gp_cdf(p, x - h)) / (2 * h);
    EXPECT_NEAR(std::exp(gp_logpdf(p, x)), fd, 1e-8);
  }
}

TEST(GpLogpdf, IntegratesToOne) {
  using boost::math::quadrature::gauss_kronrod;
  for (const GpParams& p : {GpParams{0, 1, 0.2}, GpParams{2, 3, -0.3}, GpParams{0, 1, 0.0}}) {
    const double upper = gp_upper_endpoint(p);
    const double total = gauss_kronrod<double, 61>::integrate(
        [&](double x) { return std::exp(gp_logpdf(p, x)); }, p.location,
        std::isfinite(upper) ? upper : std::numeric_limits<double>::infinity(), 15, 1e-12);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(GpSample, Reproducible) {
  EXPECT_EQ(gp_sample({1, 2, 0.1}, 1, 42), gp_sample({1, 2, 0.1}, 1, 42));
  EXPECT_EQ(gp_sample({1, 2, 0.1}, 100, 7), gp_sample({1, 2, 0.1}, 100, 7));
  EXPECT_NE(gp_sample({1, 2, 0.1}, 100, 7), gp_sample({1, 2, 0.1}, 100, 8));
  EXPECT_THROW(gp_sample({1, 2, 0.1}, 0, 7), InputError);
}

TEST(GpSample, EmpiricalQuantileAndMean) {
  std::vector<double> x = gp_sample({0, 1, 0.2}, 10000, 1);
  std::sort(x.begin(), x.end());
  EXPECT_NEAR(x[8999], 2.924466, 0.1);
  const std::vector<double> e = gp_sample({0, 1, 0}, 5000, 1);
  double mean = 0.0;
  for (double v : e) mean += v;
  EXPECT_NEAR(mean / e.size(), 1.0, 0.05);
}

TEST(GpRescale, Examples) {
  EXPECT_EQ(gp_rescale({1, 2, 0.3}, 1.0), (GpParams{1, 2, 0.3}));
  EXPECT_EQ(gp_rescale({1, 2, 0.3}, 10.0), (GpParams{10, 20, 0.3}));
  EXPECT_THROW(gp_rescale({1, 2, 0.3}, 0.0), InputError);
  const GpParams p{0.5, 1.5, -0.2};
  for (double u = 0.1; u < 0.995; u += 0.089) {
    EXPECT_NEAR(gp_quantile(gp_rescale(p, 2.0), u), 2.0 * gp_quantile(p, u), 1e-13);
  }
}

TEST(GpRescale, DistributionOfScaledSample) {
  const GpParams p{1.0, 2.0, 0.15};
  const double c = 3.7;
  std::vector<double> x = gp_sample(p, 10000, 99);
  for (double& v : x) v *= c;
  std::sort(x.begin(), x.end());
  const GpParams q = gp_rescale(p, c);
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = gp_cdf(q, x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  EXPECT_LT(d, 0.02);
}

TEST(Kappa, GumbelLimit) {
  const KappaParams p{3.0, 2.0, 0.0, 0.0};
  EXPECT_NEAR(kappa_quantile(p, 0.5), 3.0 - 2.0 * std::log(std::log(2.0)), 1e-12);
}

TEST(Kappa, UnitHIsGeneralizedPareto) {
  for (double k : {-0.3, -0.05, 0.0, 0.2, 0.5}) {
    for (double u = 0.02; u < 1.0; u += 0.06) {
      EXPECT_NEAR(kappa_quantile({1.0, 2.0, k, 1.0}, u), gp_quantile({1.0, 2.0, -k}, u), 1e-12);
    }
  }
}

TEST(Kappa, QuantileInvertsCdf) {
  // Kappa CDF: F(x) = [1 - h (1 - k (x - xi) / alpha)^(1/k)]^(1/h).
  const double k = -0.1, h = -1.0, xi = 0.0, alpha = 1.0;
  const auto cdf = [&](double x) {
    return std::pow(1.0 - h * std::pow(1.0 - k * (x - xi) / alpha, 1.0 / k), 1.0 / h);
  };
  const auto [lo, hi] = boost::math::tools::bisect([&](double x) { return cdf(x) - 0.99; }, 0.0,
                                                   50.0,
                                                   boost::math::tools::eps_tolerance<double>(60));
  EXPECT_NEAR(kappa_quantile({xi, alpha, k, h}, 0.99), 0.5 * (lo + hi), 1e-10);
}

TEST(Kappa, Validation) {
  EXPECT_THROW(validate(KappaParams{0, 1, -1.5, 0.0}), InputError);
  EXPECT_THROW(validate(KappaParams{0, 1, 0.5, -3.0}), InputError);
  EXPECT_THROW(kappa_quantile({0, 1, 0, 0}, 0.0), InputError);
}

TEST(Rng, StreamsAreIndependentOfSchedule) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Rng, UniformAndPoissonMoments) {
  Rng rng(11);
  double su = 0.0, sp = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    sp += static_cast<double>(rng.poisson(4.0));
  }
  EXPECT_NEAR(su / n, 0.5, 0.01);
  EXPECT_NEAR(sp / n, 4.0, 0.05);
}

}  // namespace
}  // namespace regflood
