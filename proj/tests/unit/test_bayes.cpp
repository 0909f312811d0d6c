#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "regflood/bayes.hpp"
#include "regflood/error.hpp"
#include "regflood/eval.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

PriorSpec test_prior() {
  PriorSpec p;
  p.gamma = {std::log(10.0), std::log(3.0), 0.1};
  p.d = {0.04, 0.09, 0.01};
  return p;
}

Region synthetic(std::uint64_t seed) {
  SynthSpec spec;
  spec.years = 30;
  spec.seed = seed;
  return synth_region(spec).region;
}

PseudoSite pseudo(const std::string& code, GpParams rescaled, double var_mu, double var_sigma) {
  PseudoSite s;
  s.code = code;
  s.index_flood = 1.0;
  s.rescaled = rescaled;
  s.variances.var_log_location = var_mu;
  s.variances.var_log_scale = var_sigma;
  return s;
}

// Regression whose prediction at `area` has variance `var` and mean 1.
AreaRegression centred_regression(double area, double var, int n = 10) {
  AreaRegression r;
  r.a = 1.0 / area;
  r.b = 1.0;
  r.n = n;
  r.mean_log_area = std::log(area);
  r.sxx = 1.0;
  r.s2 = var / (1.0 + 1.0 / n);
  return r;
}

Region four_sites() {
  Region r;
  for (const char* code : {"T", "A", "B", "C"}) {
    Site s;
    s.meta.code = code;
    s.meta.area_km2 = 100.0;
    s.pot.code = code;
    r.sites.push_back(s);
  }
  r.target = "T";
  return r;
}

TEST(LogPrior, ModalRidge) {
  const PriorSpec p = test_prior();
  const GpParams theta{10.0, 3.0, 0.1};
  double expected = -p.gamma[0] - p.gamma[1];
  for (double d : p.d) expected -= 0.5 * std::log(2.0 * std::numbers::pi * d);
  EXPECT_NEAR(log_prior(p, theta), expected, 1e-13);
  EXPECT_EQ(log_prior(p, {0.0, 3.0, 0.1}), kNegInf);
  EXPECT_EQ(log_prior(p, {1.0, -3.0, 0.1}), kNegInf);
}

TEST(LogPrior, IntegratesToOne) {
  // Midpoint rule over a box holding all but a negligible tail.
  const PriorSpec p = test_prior();
  const int n = 160;
  const double mu_lo = 3.0, mu_hi = 35.0, s_lo = 0.5, s_hi = 16.0, x_lo = -0.4, x_hi = 0.6;
  const double hm = (mu_hi - mu_lo) / n, hs = (s_hi - s_lo) / n, hx = (x_hi - x_lo) / n;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        total += std::exp(log_prior(
            p, {mu_lo + (i + 0.5) * hm, s_lo + (j + 0.5) * hs, x_lo + (k + 0.5) * hx}));
      }
    }
  }
  EXPECT_NEAR(total * hm * hs * hx, 1.0, 1e-3);
}

TEST(LogPosterior, AdditiveAndSupport) {
  const PriorSpec p = test_prior();
  EXPECT_EQ(log_posterior(p, {}, {10, 3, 0.1}), log_prior(p, {10, 3, 0.1}));
  const std::vector<double> x = gp_sample({10, 3, 0.1}, 30, 3);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const GpParams theta{5.0 + 4.0 * rng.uniform(), 1.0 + 4.0 * rng.uniform(),
                         -0.2 + 0.5 * rng.uniform()};
    EXPECT_DOUBLE_EQ(log_posterior(p, x, theta), log_prior(p, theta) + gp_loglik(theta, x));
  }
  const double xmin = *std::min_element(x.begin(), x.end());
  EXPECT_EQ(log_posterior(p, x, {xmin + 0.1, 3.0, 0.2}), kNegInf);
}

TEST(LogPosterior, FlatPriorModeNearMle) {
  PriorSpec p = test_prior();
  p.d = {1e6, 1e6, 1e6};
  const std::vector<double> x = gp_sample({10, 3, 0.1}, 400, 5);
  const GpFit mle = gp_fit_mle(x, 10.0);
  double best = kNegInf, best_s = 0, best_x = 0;
  const double step_s = 0.01, step_x = 0.002;
  for (double s = 2.0; s < 4.5; s += step_s) {
    for (double xi = -0.2; xi < 0.4; xi += step_x) {
      // The Jacobian of the flat lognormal prior is -log sigma; remove it to
      // compare with the likelihood maximum.
      const double v = log_posterior(p, x, {10.0, s, xi}) + std::log(s);
      if (v > best) {
        best = v;
        best_s = s;
        best_x = xi;
      }
    }
  }
  EXPECT_NEAR(best_s, mle.params.scale, step_s);
  EXPECT_NEAR(best_x, mle.params.shape, step_x);
}

TEST(ElicitPrior, Additivity) {
  const Region r = four_sites();
  const AreaRegression reg = centred_regression(100.0, 0.02);
  std::vector<PseudoSite> sites{pseudo("A", {1, 2, 0.1}, 0.01, 0.01),
                                pseudo("B", {1.2, 2.2, 0.2}, 0.01, 0.01),
                                pseudo("C", {0.8, 1.8, 0.0}, 0.01, 0.01)};
  const PriorSpec p = elicit_prior(r, "T", reg, sites);
  EXPECT_NEAR(p.var_log_c, 0.02, 1e-15);
  EXPECT_NEAR(p.c_hat, 1.0, 1e-14);
  EXPECT_NEAR(p.d[1], 0.03, 1e-15);
  EXPECT_NEAR(p.d[0], 0.03, 1e-15);
  EXPECT_NEAR(p.gamma[0], (std::log(1.0) + std::log(1.2) + std::log(0.8)) / 3.0, 1e-14);
  EXPECT_NEAR(p.gamma[2], 0.1, 1e-15);
  // Sample variance of (0.1, 0.2, 0.0) with divisor N - 2 = 2 (N = 3 sites + target).
  EXPECT_NEAR(p.d[2], 0.01, 1e-15);
  EXPECT_EQ(p.sites, (std::vector<std::string>{"A", "B", "C"}));
}

TEST(ElicitPrior, DegenerateAgreement) {
  const Region r = four_sites();
  const AreaRegression reg = centred_regression(100.0, 0.0);
  const GpParams t{2.0, 3.0, 0.15};
  std::vector<PseudoSite> sites{pseudo("A", t, 0, 0), pseudo("B", t, 0, 0), pseudo("C", t, 0, 0)};
  const PriorSpec p = elicit_prior(r, "T", reg, sites);
  EXPECT_NEAR(p.gamma[0], std::log(2.0), 1e-14);
  EXPECT_NEAR(p.gamma[1], std::log(3.0), 1e-14);
  EXPECT_NEAR(p.gamma[2], 0.15, 1e-15);
  ElicitOptions o;
  for (double d : p.d) EXPECT_EQ(d, o.d_min);
}

TEST(ElicitPrior, TargetLeakageIsAContractViolation) {
  const Region r = four_sites();
  AreaRegression reg = centred_regression(100.0, 0.02);
  std::vector<PseudoSite> sites{pseudo("A", {1, 2, 0.1}, 0, 0), pseudo("B", {1, 2, 0.1}, 0, 0),
                                pseudo("T", {1, 2, 0.1}, 0, 0)};
  EXPECT_THROW(elicit_prior(r, "T", reg, sites), ContractViolation);
  sites.back().code = "C";
  reg.members = {"A", "B", "T"};
  EXPECT_THROW(elicit_prior(r, "T", reg, sites), ContractViolation);
  reg.members = {"A", "B", "C"};
  sites.pop_back();
  EXPECT_THROW(elicit_prior(r, "T", reg, sites), InsufficientData);
}

TEST(ElicitPrior, IgnoresTargetExceedances) {
  Region r = synthetic(31);
  const std::string target = r.sites[0].meta.code;
  const PriorSpec a = elicit_prior(r, target);
  for (double& x : r.sites[0].pot.peaks) x = 3.0 * x + 1.0;
  r.sites[0].pot.peaks.resize(r.sites[0].pot.peaks.size() / 2);
  const PriorSpec b = elicit_prior(r, target);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.d, b.d);
  EXPECT_EQ(a.sites, b.sites);
  EXPECT_EQ(std::count(a.sites.begin(), a.sites.end(), target), 0);
}

TEST(ElicitPrior, LocationCentredOnTruth) {
  int inside = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    SynthSpec spec;
    spec.years = 30;
    spec.seed = derive_seed(37, rep);
    const SyntheticRegion s = synth_region(spec);
    const PriorSpec p = elicit_prior(s.region, s.truth[0].code);
    inside += std::abs(p.gamma[0] - std::log(s.truth[0].params.location)) <
                      3.0 * std::sqrt(p.d[0])
                  ? 1
                  : 0;
  }
  EXPECT_GE(inside, static_cast<int>(0.95 * reps));
}

TEST(FlatPrior, LargeVariances) {
  const PriorSpec p = flat_prior(test_prior());
  EXPECT_EQ(p.gamma, test_prior().gamma);
  for (double d : p.d) EXPECT_EQ(d, 1000.0);
}

TEST(Mcmc, ReproducibleAndThreadIndependent) {
  const PriorSpec p = test_prior();
  const std::vector<double> x = gp_sample({10, 3, 0.1}, 40, 7);
  McmcConfig c{3, 2000, 500, 1, {0.1, 0.1, 0.1}, true, 1};
  const PosteriorChains a = mcmc_sample(p, x, c, 42);
  c.threads = 3;
  const PosteriorChains b = mcmc_sample(p, x, c, 42);
  ASSERT_EQ(a.chains.size(), b.chains.size());
  for (std::size_t i = 0; i < a.chains.size(); ++i) EXPECT_EQ(a.chains[i].draws, b.chains[i].draws);
  EXPECT_EQ(a.retained(), 3u * 1500u);
  EXPECT_NE(mcmc_sample(p, x, c, 43).chains[0].draws, a.chains[0].draws);
  c.iterations = 999;
  EXPECT_THROW(mcmc_sample(p, x, c, 42), InputError);
}

TEST(Mcmc, DrawsRespectSupport) {
  const std::vector<double> x = gp_sample({10, 3, -0.2}, 40, 8);
  const double xmin = *std::min_element(x.begin(), x.end());
  const PosteriorChains pc = mcmc_sample(test_prior(), x, {2, 3000, 1000, 1}, 3);
  for (const GpParams& d : pc.pooled()) {
    ASSERT_GT(d.location, 0.0);
    ASSERT_GT(d.scale, 0.0);
    ASSERT_LE(d.location, xmin);
    ASSERT_GT(gp_loglik(d, x), kNegInf);
  }
}

TEST(Mcmc, TargetsThePriorWithoutData) {
  const PriorSpec p = test_prior();
  const PosteriorChains pc = mcmc_sample(p, {}, {4, 12000, 2000, 1}, 17);
  for (int k = 0; k < 3; ++k) {
    double mean = 0.0, ess = 0.0;
    std::size_t n = 0;
    for (const auto& c : pc.chains) {
      std::vector<double> s;
      for (const auto& d : c.draws) {
        s.push_back(k == 0 ? std::log(d.location) : k == 1 ? std::log(d.scale) : d.shape);
      }
      for (double v : s) mean += v;
      n += s.size();
      ess += effective_sample_size(s);
    }
    mean /= static_cast<double>(n);
    EXPECT_LT(std::abs(mean - p.gamma[k]), 3.0 * std::sqrt(p.d[k] / ess)) << k;
  }
}

TEST(Mcmc, ScaleConsistency) {
  const PriorSpec p = test_prior();
  const std::vector<double> x = gp_sample({10, 3, 0.1}, 40, 9);
  const double c = 5.0;
  PriorSpec q = p;
  q.gamma[0] += std::log(c);
  q.gamma[1] += std::log(c);
  std::vector<double> cx = x;
  for (double& v : cx) v *= c;
  const McmcConfig cfg{4, 6000, 2000, 1};
  const auto a = mcmc_sample(p, x, cfg, 21).pooled();
  const auto b = mcmc_sample(q, cx, cfg, 21).pooled();
  std::vector<double> sa, sb;
  for (const auto& d : a) sa.push_back(c * d.scale);
  for (const auto& d : b) sb.push_back(d.scale);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  // Two-sample KS statistic.
  std::size_t i = 0, j = 0;
  double ks = 0.0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] <= sb[j]) ++i; else ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) / sa.size() -
                               static_cast<double>(j) / sb.size()));
  }
  EXPECT_LT(ks, 0.03);
}

TEST(Diagnostics, IidChains) {
  std::vector<std::vector<double>> chains(4);
  Rng rng(5);
  for (auto& c : chains) {
    for (int i = 0; i < 2000; ++i) c.push_back(rng.normal());
  }
  const double r = split_rhat(chains);
  EXPECT_GE(r, 0.99);
  EXPECT_LE(r, 1.05);
  const double ess = effective_sample_size(chains[0]);
  EXPECT_NEAR(ess / 2000.0, 1.0, 0.2);
}

TEST(Diagnostics, SeparatedChains) {
  const std::vector<std::vector<double>> chains{std::vector<double>(100, 1.0),
                                                std::vector<double>(100, 2.0)};
  EXPECT_GT(split_rhat(chains), 5.0);
}

TEST(Diagnostics, AutocorrelatedChain) {
  Rng rng(6);
  std::vector<double> c;
  double v = 0.0;
  for (int i = 0; i < 50000; ++i) {
    v = 0.9 * v + rng.normal();
    c.push_back(v);
  }
  // Integrated autocorrelation time (1 + rho) / (1 - rho) = 19.
  EXPECT_NEAR(effective_sample_size(c) / (50000.0 / 19.0), 1.0, 0.2);
}

TEST(Diagnostics, SingleChain) {
  const PosteriorChains pc = mcmc_sample(test_prior(), {}, {1, 2000, 500, 1}, 1);
  const ChainDiagnostics d = chain_diagnostics(pc);
  EXPECT_FALSE(d.rhat_available);
  EXPECT_TRUE(std::isnan(d.params[0].rhat));
  EXPECT_GT(d.params[0].ess, 0.0);
}

TEST(PosteriorQuantiles, DegenerateChain) {
  PosteriorChains pc;
  Chain c;
  const GpParams t{10, 3, 0.1};
  c.draws.assign(600, t);
  pc.chains.push_back(c);
  const std::vector<double> periods{2, 10};
  const auto q = posterior_quantiles(pc, 2.0, periods);
  ASSERT_EQ(q.size(), 2u);
  for (const auto& s : q) {
    EXPECT_DOUBLE_EQ(s.point, return_level(t, 2.0, s.period));
    EXPECT_DOUBLE_EQ(s.lower, s.point);
    EXPECT_DOUBLE_EQ(s.upper, s.point);
  }
  pc.chains[0].draws.resize(499);
  EXPECT_THROW(posterior_quantiles(pc, 2.0, periods), InsufficientData);
}

TEST(PosteriorQuantiles, PriorPredictiveBandWithoutData) {
  const PosteriorChains pc = mcmc_sample(test_prior(), {}, {2, 3000, 500, 1}, 2);
  std::vector<double> q;
  for (const auto& d : pc.pooled()) q.push_back(return_level(d, 2.0, 10.0));
  std::sort(q.begin(), q.end());
  const std::vector<double> periods{10};
  const auto s = posterior_quantiles(pc, 2.0, periods).front();
  const auto at = [&](double u) {
    const double h = u * (q.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    return q[lo] + (h - lo) * (q[std::min(lo + 1, q.size() - 1)] - q[lo]);
  };
  EXPECT_NEAR(s.point, at(0.5), 1e-9 * s.point);
  EXPECT_NEAR(s.lower, at(0.05), 1e-9 * s.point);
  EXPECT_NEAR(s.upper, at(0.95), 1e-9 * s.point);
}

}  // namespace
}  // namespace regflood
