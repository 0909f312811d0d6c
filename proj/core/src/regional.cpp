#include "regflood/regional.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

#include <Eigen/Dense>

#include "regflood/error.hpp"
#include "regflood/log.hpp"
#include "regflood/rng.hpp"

namespace regflood {

const Site& Region::site(std::string_view code) const { return sites[index_of(code)]; }

std::size_t Region::index_of(std::string_view code) const {
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].meta.code == code) return i;
  }
  throw InputError("site '" + std::string(code) + "' is not in the region");
}

void validate(const Region& region) {
  if (region.sites.size() < 2) throw InputError("a region needs at least 2 sites");
  std::set<std::string> codes;
  for (const auto& s : region.sites) {
    if (s.meta.code.empty()) throw InputError("site with an empty code");
    if (!codes.insert(s.meta.code).second) {
      throw InputError("duplicate site code '" + s.meta.code + "'");
    }
  }
  if (!region.target.empty() && !codes.count(region.target)) {
    throw InputError("target '" + region.target + "' is not in the region");
  }
}

double discordancy_critical_value(std::size_t n_sites) {
  static constexpr double kTable[] = {1.333, 1.648, 1.917, 2.140, 2.329,
                                      2.491, 2.632, 2.757, 2.869, 2.971};
  if (n_sites < 4) throw InputError("discordancy needs at least 4 sites");
  if (n_sites == 4) return 1.0;
  if (n_sites >= 15) return 3.0;
  return kTable[n_sites - 5];
}

DiscordancyReport discordancy(const Region& region) {
  validate(region);
  const std::size_t n = region.sites.size();
  DiscordancyReport report;
  report.critical_value = discordancy_critical_value(n);
  std::vector<Eigen::Vector3d> u(n);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const LmomentSet lm = sample_lmoments(region.sites[i].pot.peaks);
    u[i] = {lm.t, lm.t3, lm.t4};
    if (!u[i].allFinite()) {
      throw InsufficientData("discordancy: site '" + region.sites[i].meta.code +
                             "' needs at least 4 exceedances");
    }
    mean += u[i];
  }
  mean /= static_cast<double>(n);
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (const auto& ui : u) s += (ui - mean) * (ui - mean).transpose();

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s);
  const double largest = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(largest, 1e-300))) {
    std::string codes;
    for (const auto& site : region.sites) codes += (codes.empty() ? "" : ", ") + site.meta.code;
    throw NumericalError("discordancy: L-moment ratio covariance is singular; sites " + codes +
                         " lie on a common line or plane in (t, t3, t4)");
  }
  const Eigen::Matrix3d s_inv = s.inverse();
  for (std::size_t i = 0; i < n; ++i) {
    DiscordancyRow row;
    row.code = region.sites[i].meta.code;
    row.t = u[i][0];
    row.t3 = u[i][1];
    row.t4 = u[i][2];
    const Eigen::Vector3d d = u[i] - mean;
    row.d = static_cast<double>(n) / 3.0 * d.dot(s_inv * d);
    row.discordant = row.d > report.critical_value;
    report.rows.push_back(row);
  }
  return report;
}

std::string classify_heterogeneity(double h1) {
  if (h1 < 1.0) return "acceptably homogeneous";
  if (h1 < 2.0) return "probably heterogeneous";
  return "definitively heterogeneous";
}

std::string HeterogeneityReport::classification() const { return classify_heterogeneity(h[0]); }

std::array<double, 3> heterogeneity_v(const std::vector<LmomentSet>& sites,
                                      const std::vector<double>& weights) {
  double w_sum = 0.0, t_r = 0.0, t3_r = 0.0, t4_r = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    w_sum += weights[i];
    t_r += weights[i] * sites[i].t;
    t3_r += weights[i] * sites[i].t3;
    t4_r += weights[i] * sites[i].t4;
  }
  t_r /= w_sum;
  t3_r /= w_sum;
  t4_r /= w_sum;
  double v1 = 0.0, v2 = 0.0, v3 = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double dt = sites[i].t - t_r;
    const double dt3 = sites[i].t3 - t3_r;
    const double dt4 = sites[i].t4 - t4_r;
    v1 += weights[i] * dt * dt;
    v2 += weights[i] * std::sqrt(dt * dt + dt3 * dt3);
    v3 += weights[i] * std::sqrt(dt3 * dt3 + dt4 * dt4);
  }
  return {std::sqrt(v1 / w_sum), v2 / w_sum, v3 / w_sum};
}

HeterogeneityReport heterogeneity(const Region& region, int nsim, std::uint64_t seed,
                                  unsigned threads) {
  validate(region);
  if (nsim < 2) throw InputError("heterogeneity: Nsim must be at least 2");
  if (nsim < 100) {
    log::warn("heterogeneity: Nsim = " + std::to_string(nsim) +
              " is below the recommended minimum of 100");
  }
  const std::size_t n_sites = region.sites.size();
  std::vector<LmomentSet> observed;
  std::vector<SiteLmoments> weighted;
  std::vector<double> weights;
  std::vector<std::size_t> lengths;
  for (const auto& site : region.sites) {
    const std::size_t n = site.pot.peaks.size();
    if (n < 4) {
      throw InsufficientData("heterogeneity: site '" + site.meta.code +
                             "' needs at least 4 exceedances");
    }
    const LmomentSet lm = sample_lmoments(site.pot.peaks);
    observed.push_back(lm);
    weighted.push_back({lm, static_cast<double>(n), 0.0});
    weights.push_back(static_cast<double>(n));
    lengths.push_back(n);
  }

  HeterogeneityReport report;
  report.nsim = nsim;
  report.seed = seed;
  report.regional = regional_average_lmoments(weighted, RescaleMode::Mean);
  report.v_obs = heterogeneity_v(observed, weights);
  try {
    report.kappa = kappa_fit_lmom(report.regional);
  } catch (const NumericalError& e) {
    const GpParams gp = gp_fit_lmom(report.regional);
    report.kappa = {gp.location, gp.scale, -gp.shape, 1.0};
    report.gp_fallback = true;
    log::warn(std::string("heterogeneity: kappa fit failed (") + e.what() +
              "); simulating from the GP parent instead");
  }

  std::vector<std::array<double, 3>> sims(static_cast<std::size_t>(nsim));
  auto simulate = [&](std::size_t s) {
    Rng rng(derive_seed(seed, s));
    std::vector<LmomentSet> sim_sites(n_sites);
    std::vector<double> sample;
    for (std::size_t i = 0; i < n_sites; ++i) {
      sample.resize(lengths[i]);
      for (auto& x : sample) x = kappa_draw(report.kappa, rng);
      sim_sites[i] = sample_lmoments(sample);
    }
    sims[s] = heterogeneity_v(sim_sites, weights);
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(nsim));
  if (workers <= 1) {
    for (std::size_t s = 0; s < sims.size(); ++s) simulate(s);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t s = w; s < sims.size(); s += workers) simulate(s);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (int k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (const auto& v : sims) mean += v[k];
    mean /= nsim;
    double ss = 0.0;
    for (const auto& v : sims) ss += (v[k] - mean) * (v[k] - mean);
    const double sd = std::sqrt(ss / (nsim - 1));
    report.sim_mean[k] = mean;
    report.sim_sd[k] = sd;
    if (!(sd > 0.0)) throw NumericalError("heterogeneity: simulated V has zero spread");
    report.h[k] = (report.v_obs[k] - mean) / sd;
  }
  return report;
}

GrowthCurve growth_curve(const Region& region, std::string_view exclude, RescaleMode mode,
                         IndexFloodMethod method) {
  validate(region);
  GrowthCurve curve;
  curve.mode = mode;
  std::vector<SiteLmoments> sites;
  double weight_sum = 0.0, rate_sum = 0.0;
  for (const auto& site : region.sites) {
    if (!exclude.empty() && site.meta.code == exclude) continue;
    SiteLmoments s;
    s.lm = sample_lmoments(site.pot.peaks);
    s.weight = static_cast<double>(site.pot.peaks.size());
    if (mode == RescaleMode::OneYearQuantile) {
      s.index_flood = at_site_index_flood(site.pot, method).c;
      if (!(s.index_flood > 0.0)) {
        throw InputError("growth curve: index flood of '" + site.meta.code +
                         "' is not positive");
      }
    }
    sites.push_back(s);
    curve.members.push_back(site.meta.code);
    weight_sum += s.weight;
    rate_sum += s.weight * site.pot.rate();
  }
  if (sites.size() < 2) throw InsufficientData("growth curve needs at least 2 included sites");
  curve.rate = rate_sum / weight_sum;
  curve.regional = regional_average_lmoments(sites, mode);
  curve.params = gp_fit_lmom(curve.regional);
  if (mode == RescaleMode::OneYearQuantile) {
    if (!(curve.rate > 1.0)) {
      throw InputError("growth curve: the 1-year quantile needs more than one event per year");
    }
    curve.p_index = 1.0 - 1.0 / curve.rate;
    const double q = gp_quantile(curve.params, curve.p_index);
    if (!(q > 0.0)) throw NumericalError("growth curve: non-positive 1-year quantile");
    curve.params = gp_rescale(curve.params, 1.0 / q);
  } else {
    curve.p_index = gp_cdf(curve.params, 1.0);
  }
  return curve;
}

double index_flood_quantile(const GrowthCurve& curve, double c, double p) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("index flood must be positive");
  return c * gp_quantile(curve.params, p);
}

}  // namespace regflood
