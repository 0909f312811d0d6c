#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regflood/distributions.hpp"
#include "regflood/fit.hpp"
#include "regflood/indexflood.hpp"
#include "regflood/regional.hpp"

namespace regflood {

/// Independent lognormal (location), lognormal (scale) and normal (shape)
/// prior: theta' = (log mu, log sigma, xi) ~ N(gamma, diag(d)).
struct PriorSpec {
  std::array<double, 3> gamma{};
  std::array<double, 3> d{1.0, 1.0, 1.0};
  std::string target;
  /// Non-target sites whose pseudo-parameters entered the prior.
  std::vector<std::string> sites;
  double target_area_km2 = 0.0;
  double c_hat = 0.0;      ///< predicted target index flood
  double var_log_c = 0.0;  ///< its prediction variance
};

/// Parameters of one non-target site on its index-flood-rescaled sample.
struct PseudoSite {
  std::string code;
  double index_flood = 0.0;
  GpParams rescaled;  ///< (mu*, sigma*, xi*)
  LogParamVariances variances;
};

struct ElicitOptions {
  /// CV of the threshold, supplies Var[log mu*] for fixed-location fits.
  double threshold_cv = 0.1;
  /// Include the new-observation term in Var[log C].
  bool include_residual = true;
  /// Add the sample variance of the log pseudo-values to d1 and d2.
  bool add_dispersion = false;
  /// Lower bound on every d_i.
  double d_min = 1e-4;
  IndexFloodMethod index_flood_method = IndexFloodMethod::GpFit;
};

/// Index flood C_i of `site` from its own record, then a fixed-location MLE
/// on x / C_i with location threshold / C_i.
PseudoSite pseudo_site(const Site& site, const ElicitOptions& options = {});

/// Prior for `target` from pseudo target-site parameters
///   mu~_i = mu*_i C, sigma~_i = sigma*_i C, xi~_i = xi*_i
/// with C predicted by `regression` at the target area. gamma holds the means
/// of (log mu~, log sigma~, xi~); d1 and d2 add Var[log C] to the mean
/// per-site variances of log mu* and log sigma*; d3 is the sample variance of
/// xi~ with divisor N - 2, N counting the pseudo-sites plus the target.
/// Throws ContractViolation when the target appears among the pseudo-sites or
/// the regression members, InsufficientData with fewer than 3 pseudo-sites.
PriorSpec elicit_prior(const Region& region, std::string_view target,
                       const AreaRegression& regression, std::span<const PseudoSite> sites,
                       const ElicitOptions& options = {});

/// Convenience: pseudo-sites and area regression from every non-target site,
/// then elicit_prior. Never reads the target's exceedances.
PriorSpec elicit_prior(const Region& region, std::string_view target,
                       const ElicitOptions& options = {});

/// Same gamma with d_i = 1000.
PriorSpec flat_prior(PriorSpec prior);

/// Log prior density of theta, including the Jacobian -log mu - log sigma;
/// -inf when mu <= 0 or sigma <= 0.
double log_prior(const PriorSpec& prior, const GpParams& theta);

/// log_prior + GP log-likelihood of the exceedances (unnormalized).
double log_posterior(const PriorSpec& prior, std::span<const double> x, const GpParams& theta);

struct McmcConfig {
  int chains = 4;
  int iterations = 20000;  ///< per chain, including burn-in
  int burn_in = 5000;
  int thin = 1;
  /// Initial random-walk step sizes on (log mu, log sigma, xi).
  std::array<double, 3> proposal_sd{0.1, 0.1, 0.1};
  /// Scale steps during burn-in; frozen afterwards.
  bool adapt = true;
  unsigned threads = 0;  ///< 0 = one thread per chain
};

struct Chain {
  std::vector<GpParams> draws;  ///< retained draws
  /// Post-burn-in acceptance rate of each component update.
  std::array<double, 3> acceptance{};
  std::array<double, 3> final_proposal_sd{};
  double acceptance_rate() const;
};

struct PosteriorChains {
  std::vector<Chain> chains;
  int burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::size_t retained() const;
  /// Draws of all chains, chain by chain.
  std::vector<GpParams> pooled() const;
};

/// Component-wise random-walk Metropolis on theta' = (log mu, log sigma, xi).
/// Chain c uses derive_seed(seed, c).
PosteriorChains mcmc_sample(const PriorSpec& prior, std::span<const double> x,
                            const McmcConfig& config, std::uint64_t seed);

struct ParamDiagnostics {
  double rhat = 0.0;  ///< split-chain; NaN with a single chain
  double ess = 0.0;
};

struct ChainDiagnostics {
  std::array<ParamDiagnostics, 3> params{};  ///< (log mu, log sigma, xi)
  std::vector<double> acceptance;
  bool rhat_available = false;
};

/// Split potential scale reduction of equally long chains.
double split_rhat(const std::vector<std::vector<double>>& chains);
/// Effective sample size of one chain (Geyer initial positive sequence).
double effective_sample_size(const std::vector<double>& chain);

ChainDiagnostics chain_diagnostics(const PosteriorChains& chains);

struct QuantileSummary {
  double period = 0.0;
  double point = 0.0;  ///< posterior median
  double lower = 0.0;
  double upper = 0.0;
};

/// Posterior median and equal-tailed credible interval of the T-year level
/// for each period. Needs >= 500 retained draws.
std::vector<QuantileSummary> posterior_quantiles(const PosteriorChains& chains, double lambda,
                                                 std::span<const double> periods,
                                                 double level = 0.90);

}  // namespace regflood
