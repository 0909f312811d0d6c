#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "regflood/distributions.hpp"
#include "regflood/indexflood.hpp"
#include "regflood/lmoments.hpp"
#include "regflood/pot.hpp"

namespace regflood {

struct Site {
  StationMeta meta;
  PotSeries pot;
};

/// A set of sites assumed to share one dimensionless growth curve.
struct Region {
  std::vector<Site> sites;
  std::string target;  ///< code of the site of interest

  const Site& site(std::string_view code) const;
  std::size_t index_of(std::string_view code) const;
};

/// Throws InputError unless there are >= 2 sites with unique codes and the
/// target (when set) is one of them.
void validate(const Region& region);

struct DiscordancyRow {
  std::string code;
  double t = 0.0, t3 = 0.0, t4 = 0.0;
  double d = 0.0;
  bool discordant = false;
};

struct DiscordancyReport {
  std::vector<DiscordancyRow> rows;
  double critical_value = 0.0;
};

/// Hosking-Wallis critical value of D for a region of `n_sites` sites.
double discordancy_critical_value(std::size_t n_sites);

/// D_i = (N/3) (u_i - u)' S^-1 (u_i - u) on u_i = (t, t3, t4). Needs >= 4
/// sites; throws NumericalError naming the sites when S is singular.
DiscordancyReport discordancy(const Region& region);

struct HeterogeneityReport {
  std::array<double, 3> h{};         ///< H1, H2, H3
  std::array<double, 3> v_obs{};     ///< observed V1, V2, V3
  std::array<double, 3> sim_mean{};
  std::array<double, 3> sim_sd{};
  LmomentSet regional;               ///< weighted regional (1, t, t3, t4)
  KappaParams kappa;                 ///< parent used for simulation
  bool gp_fallback = false;          ///< kappa fit failed; GP parent used
  int nsim = 0;
  std::uint64_t seed = 0;

  /// Classification of H1.
  std::string classification() const;
  /// H1 <= 0 may indicate correlation between sites.
  bool correlation_note() const { return h[0] <= 0.0; }
};

std::string classify_heterogeneity(double h1);

/// V1, V2, V3 of a set of site L-moment ratios, weighted by record length.
std::array<double, 3> heterogeneity_v(const std::vector<LmomentSet>& sites,
                                      const std::vector<double>& weights);

/// H statistics by Monte Carlo under a kappa parent fitted to the regional
/// average L-moments. Each simulated region reuses the real record lengths.
/// Simulation s draws from derive_seed(seed, s), so the result does not depend
/// on `threads` (0 picks the hardware concurrency).
HeterogeneityReport heterogeneity(const Region& region, int nsim, std::uint64_t seed,
                                  unsigned threads = 0);

/// Dimensionless regional GP quantile function.
struct GrowthCurve {
  GpParams params;
  std::vector<std::string> members;
  RescaleMode mode = RescaleMode::OneYearQuantile;
  /// Non-exceedance probability at which the curve equals 1.
  double p_index = 0.5;
  /// Record-length weighted mean event rate of the members.
  double rate = 0.0;
  LmomentSet regional;
};

/// Regional growth curve from the sites other than `exclude`.
/// OneYearQuantile mode divides every site by its at-site 1-year quantile and
/// scales the fitted curve so that it equals 1 at p = 1 - 1/rate. Mean mode
/// divides by the sample mean; the curve then has mean 1 and the matching
/// index flood of a site is its mean exceedance.
GrowthCurve growth_curve(const Region& region, std::string_view exclude = {},
                         RescaleMode mode = RescaleMode::OneYearQuantile,
                         IndexFloodMethod method = IndexFloodMethod::GpFit);

/// Q = c * Q^R(p).
double index_flood_quantile(const GrowthCurve& curve, double c, double p);

}  // namespace regflood
