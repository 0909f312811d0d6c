#include "regflood/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "regflood/error.hpp"
#include "regflood/log.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Vec3 = std::array<double, 3>;

// Gaussian log density of theta' = (log mu, log sigma, xi).
double log_prior_prime(const PriorSpec& prior, const Vec3& tp) {
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double r = tp[i] - prior.gamma[i];
    total += -0.5 * std::log(2.0 * std::numbers::pi * prior.d[i]) - r * r / (2.0 * prior.d[i]);
  }
  return total;
}

GpParams from_prime(const Vec3& tp) { return {std::exp(tp[0]), std::exp(tp[1]), tp[2]}; }

double type7(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_prior(const PriorSpec& prior) {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(prior.gamma[i]) || !(prior.d[i] > 0.0) || !std::isfinite(prior.d[i])) {
      throw InputError("prior: gamma must be finite and every d_i positive");
    }
  }
}

}  // namespace

PseudoSite pseudo_site(const Site& site, const ElicitOptions& options) {
  PseudoSite out;
  out.code = site.meta.code;
  out.index_flood = at_site_index_flood(site.pot, options.index_flood_method).c;
  if (!(out.index_flood > 0.0)) {
    throw NumericalError("pseudo-site '" + site.meta.code + "': non-positive index flood");
  }
  std::vector<double> rescaled(site.pot.peaks.size());
  for (std::size_t i = 0; i < rescaled.size(); ++i) {
    rescaled[i] = site.pot.peaks[i] / out.index_flood;
  }
  const GpFit fit = gp_fit_mle(rescaled, site.pot.threshold / out.index_flood);
  out.rescaled = fit.params;
  out.variances = log_param_variances(fit, options.threshold_cv);
  return out;
}

PriorSpec elicit_prior(const Region& region, std::string_view target,
                       const AreaRegression& regression, std::span<const PseudoSite> sites,
                       const ElicitOptions& options) {
  for (const auto& s : sites) {
    if (s.code == target) {
      throw ContractViolation("prior elicitation: target '" + std::string(target) +
                              "' supplied as a pseudo-site");
    }
  }
  for (const auto& code : regression.members) {
    if (code == target) {
      throw ContractViolation("prior elicitation: target '" + std::string(target) +
                              "' is a member of the index-flood regression");
    }
  }
  if (sites.size() < 3) {
    throw InsufficientData("prior elicitation needs at least 3 non-target sites, got " +
                           std::to_string(sites.size()));
  }
  if (!(options.d_min > 0.0)) throw InputError("prior elicitation: d_min must be positive");

  PriorSpec prior;
  prior.target = std::string(target);
  prior.target_area_km2 = region.site(target).meta.area_km2;
  const IndexFloodPrediction pred =
      predict_index_flood(regression, prior.target_area_km2, options.include_residual);
  prior.c_hat = pred.c_hat;
  prior.var_log_c = pred.var_log_c;

  const double k = static_cast<double>(sites.size());
  std::vector<Vec3> pseudo;
  double mean_var_mu = 0.0, mean_var_sigma = 0.0;
  for (const auto& s : sites) {
    if (!(s.rescaled.location > 0.0) || !(s.rescaled.scale > 0.0)) {
      throw NumericalError("prior elicitation: pseudo-site '" + s.code +
                           "' has a non-positive location or scale");
    }
    pseudo.push_back({std::log(s.rescaled.location * prior.c_hat),
                      std::log(s.rescaled.scale * prior.c_hat), s.rescaled.shape});
    mean_var_mu += s.variances.var_log_location / k;
    mean_var_sigma += s.variances.var_log_scale / k;
    prior.sites.push_back(s.code);
  }
  Vec3 mean{0.0, 0.0, 0.0};
  for (const auto& p : pseudo) {
    for (int i = 0; i < 3; ++i) mean[i] += p[i] / k;
  }
  Vec3 dispersion{0.0, 0.0, 0.0};
  for (const auto& p : pseudo) {
    for (int i = 0; i < 3; ++i) dispersion[i] += (p[i] - mean[i]) * (p[i] - mean[i]) / (k - 1.0);
  }
  prior.gamma = mean;
  prior.d[0] = prior.var_log_c + mean_var_mu;
  prior.d[1] = prior.var_log_c + mean_var_sigma;
  prior.d[2] = dispersion[2];
  if (options.add_dispersion) {
    prior.d[0] += dispersion[0];
    prior.d[1] += dispersion[1];
  }
  for (auto& d : prior.d) d = std::max(d, options.d_min);
  return prior;
}

PriorSpec elicit_prior(const Region& region, std::string_view target,
                       const ElicitOptions& options) {
  validate(region);
  region.index_of(target);
  std::vector<PseudoSite> sites;
  std::vector<AreaPoint> points;
  for (const auto& site : region.sites) {
    if (site.meta.code == target) continue;
    try {
      sites.push_back(pseudo_site(site, options));
    } catch (const Error& e) {
      log::warn("prior elicitation: skipping site '" + site.meta.code + "': " + e.what());
      continue;
    }
    points.push_back({site.meta.code, site.meta.area_km2, sites.back().index_flood});
  }
  const AreaRegression regression = fit_area_regression(points, target);
  return elicit_prior(region, target, regression, sites, options);
}

PriorSpec flat_prior(PriorSpec prior) {
  prior.d = {1000.0, 1000.0, 1000.0};
  return prior;
}

double log_prior(const PriorSpec& prior, const GpParams& theta) {
  if (!(theta.location > 0.0) || !(theta.scale > 0.0) || !std::isfinite(theta.shape)) {
    return kNegInf;
  }
  const double lm = std::log(theta.location);
  const double ls = std::log(theta.scale);
  return log_prior_prime(prior, {lm, ls, theta.shape}) - lm - ls;
}

double log_posterior(const PriorSpec& prior, std::span<const double> x, const GpParams& theta) {
  const double lp = log_prior(prior, theta);
  if (!std::isfinite(lp)) return kNegInf;
  return lp + gp_loglik(theta, x);
}

double Chain::acceptance_rate() const {
  return (acceptance[0] + acceptance[1] + acceptance[2]) / 3.0;
}

std::size_t PosteriorChains::retained() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.draws.size();
  return n;
}

std::vector<GpParams> PosteriorChains::pooled() const {
  std::vector<GpParams> out;
  out.reserve(retained());
  for (const auto& c : chains) out.insert(out.end(), c.draws.begin(), c.draws.end());
  return out;
}

namespace {

// Target density in theta' coordinates.
double log_target(const PriorSpec& prior, std::span<const double> x, const Vec3& tp) {
  const double lp = log_prior_prime(prior, tp);
  if (x.empty()) return lp;
  const double ll = gp_loglik(from_prime(tp), x);
  return std::isfinite(ll) ? lp + ll : kNegInf;
}

Vec3 initial_state(const PriorSpec& prior, std::span<const double> x, Rng& rng) {
  Vec3 base = prior.gamma;
  if (!x.empty() && !std::isfinite(log_target(prior, x, base))) {
    const double xmin = *std::min_element(x.begin(), x.end());
    base[0] = std::log(std::min(std::exp(base[0]), 0.99 * xmin));
    base[2] = std::max(base[2], 0.0);
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vec3 s = base;
    for (int i = 0; i < 3; ++i) s[i] += rng.normal() * std::min(std::sqrt(prior.d[i]), 0.05);
    if (std::isfinite(log_target(prior, x, s))) return s;
  }
  if (!std::isfinite(log_target(prior, x, base))) {
    throw NumericalError("mcmc: no starting point with positive posterior density");
  }
  return base;
}

Chain run_chain(const PriorSpec& prior, std::span<const double> x, const McmcConfig& config,
                std::uint64_t seed) {
  Rng rng(seed);
  Vec3 state = initial_state(prior, x, rng);
  double lp = log_target(prior, x, state);
  Vec3 sd = config.proposal_sd;
  std::array<int, 3> batch_accept{}, kept_accept{};
  int batch_len = 0;
  constexpr int kBatch = 50;

  Chain chain;
  const int kept_iters = config.iterations - config.burn_in;
  chain.draws.reserve(static_cast<std::size_t>(kept_iters / config.thin + 1));
  for (int it = 0; it < config.iterations; ++it) {
    for (int j = 0; j < 3; ++j) {
      Vec3 prop = state;
      prop[j] += sd[j] * rng.normal();
      const double lp_prop = log_target(prior, x, prop);
      const double u = rng.uniform_open();
      if (std::isfinite(lp_prop) && std::log(u) < lp_prop - lp) {
        state = prop;
        lp = lp_prop;
        ++batch_accept[j];
        if (it >= config.burn_in) ++kept_accept[j];
      }
    }
    if (it < config.burn_in) {
      if (config.adapt && ++batch_len == kBatch) {
        for (int j = 0; j < 3; ++j) {
          const double rate = static_cast<double>(batch_accept[j]) / kBatch;
          if (rate < 0.05) {
            sd[j] *= 0.3;
          } else if (rate < 0.2) {
            sd[j] *= 0.7;
          } else if (rate > 0.5) {
            sd[j] *= 1.4;
          }
        }
        batch_accept = {};
        batch_len = 0;
      }
    } else if ((it - config.burn_in) % config.thin == 0) {
      chain.draws.push_back(from_prime(state));
    }
  }
  for (int j = 0; j < 3; ++j) {
    chain.acceptance[j] = static_cast<double>(kept_accept[j]) / kept_iters;
  }
  chain.final_proposal_sd = sd;
  return chain;
}

}  // namespace

PosteriorChains mcmc_sample(const PriorSpec& prior, std::span<const double> x,
                            const McmcConfig& config, std::uint64_t seed) {
  check_prior(prior);
  if (config.iterations < 1000) throw InputError("mcmc: iterations must be at least 1000");
  if (config.chains < 1) throw InputError("mcmc: need at least one chain");
  if (config.burn_in < 0 || config.burn_in >= config.iterations) {
    throw InputError("mcmc: burn-in must lie in [0, iterations)");
  }
  if (config.thin < 1) throw InputError("mcmc: thinning must be at least 1");
  for (double s : config.proposal_sd) {
    if (!(s > 0.0)) throw InputError("mcmc: proposal steps must be positive");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("mcmc: non-finite exceedance");
  }

  PosteriorChains out;
  out.burn_in = config.burn_in;
  out.thin = config.thin;
  out.seed = seed;
  out.chains.resize(static_cast<std::size_t>(config.chains));

  const unsigned workers = config.threads == 0 ? static_cast<unsigned>(config.chains)
                                               : std::min<unsigned>(config.threads, config.chains);
  if (workers <= 1) {
    for (std::size_t c = 0; c < out.chains.size(); ++c) {
      out.chains[c] = run_chain(prior, x, config, derive_seed(seed, c));
    }
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < out.chains.size(); c += workers) {
            out.chains[c] = run_chain(prior, x, config, derive_seed(seed, c));
          }
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

  for (std::size_t c = 0; c < out.chains.size(); ++c) {
    const double rate = out.chains[c].acceptance_rate();
    if (rate < 0.05 || rate > 0.8) {
      out.warnings.push_back("chain " + std::to_string(c) + ": post-burn-in acceptance rate " +
                             std::to_string(rate) + " outside [0.05, 0.8]");
      log::warn("mcmc: " + out.warnings.back());
    }
  }
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) throw InsufficientData("split R-hat needs at least 4 draws per chain");
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
  }
  const std::size_t len = halves.front().size();
  for (const auto& h : halves) {
    if (h.size() != len) throw InputError("split R-hat needs chains of equal length");
  }
  const double n = static_cast<double>(len);
  const double m = static_cast<double>(halves.size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    double mean = 0.0;
    for (double v : h) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : h) ss += (v - mean) * (v - mean);
    w += ss / (n - 1.0) / m;
    means.push_back(mean);
  }
  double grand = 0.0;
  for (double v : means) grand += v / m;
  double b_over_n = 0.0;
  for (double v : means) b_over_n += (v - grand) * (v - grand) / (m - 1.0);
  if (!(w > 0.0)) return b_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 4) return kNaN;
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(chain.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = chain[i] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return kNaN;
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);  // initial monotone sequence
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  return static_cast<double>(n) / std::max(tau, 1.0 / std::log10(static_cast<double>(n) + 10.0));
}

ChainDiagnostics chain_diagnostics(const PosteriorChains& chains) {
  if (chains.chains.empty()) throw InputError("chain diagnostics: no chains");
  ChainDiagnostics out;
  out.rhat_available = chains.chains.size() >= 2;
  for (const auto& c : chains.chains) out.acceptance.push_back(c.acceptance_rate());
  for (int p = 0; p < 3; ++p) {
    std::vector<std::vector<double>> series;
    for (const auto& c : chains.chains) {
      std::vector<double> s(c.draws.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& d = c.draws[i];
        s[i] = p == 0 ? std::log(d.location) : p == 1 ? std::log(d.scale) : d.shape;
      }
      series.push_back(std::move(s));
    }
    double ess = 0.0;
    for (const auto& s : series) {
      const double e = effective_sample_size(s);
      if (std::isfinite(e)) ess += e;
    }
    out.params[p].ess = ess;
    out.params[p].rhat = out.rhat_available ? split_rhat(series) : kNaN;
  }
  return out;
}

std::vector<QuantileSummary> posterior_quantiles(const PosteriorChains& chains, double lambda,
                                                 std::span<const double> periods, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("credible level must lie in (0, 1)");
  const auto draws = chains.pooled();
  if (draws.size() < 500) {
    throw InsufficientData("posterior quantiles need at least 500 retained draws, got " +
                           std::to_string(draws.size()));
  }
  std::vector<QuantileSummary> out;
  std::vector<double> values(draws.size());
  for (double period : periods) {
    for (std::size_t i = 0; i < draws.size(); ++i) {
      values[i] = return_level(draws[i], lambda, period);
    }
    std::sort(values.begin(), values.end());
    QuantileSummary q;
    q.period = period;
    q.point = type7(values, 0.5);
    q.lower = type7(values, (1.0 - level) / 2.0);
    q.upper = type7(values, 1.0 - (1.0 - level) / 2.0);
    out.push_back(q);
  }
  return out;
}

}  // namespace regflood
