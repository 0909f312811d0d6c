#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "regflood/error.hpp"
#include "regflood/rng.hpp"

namespace regflood::cli {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fixed(double v, int digits = 2) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string period_label(double t) {
  return "Q" + (t == std::floor(t) ? std::to_string(static_cast<long long>(t)) : fixed(t, 1));
}

std::string bracket(const ConfidenceInterval& ci) {
  const std::string lo = ci.lower_bounded ? fixed(ci.lower) : "<" + fixed(ci.lower);
  const std::string hi = ci.upper_bounded ? fixed(ci.upper) : ">" + fixed(ci.upper);
  return fixed(ci.estimate) + " (" + lo + ", " + hi + ")";
}

json to_json(const ConfidenceInterval& ci) {
  return {{"estimate", ci.estimate},
          {"lower", ci.lower},
          {"upper", ci.upper},
          {"lower_bounded", ci.lower_bounded},
          {"upper_bounded", ci.upper_bounded}};
}

json to_json(const LmomentSet& lm) {
  return {{"l1", lm.l1}, {"l2", lm.l2}, {"t", lm.t}, {"t3", lm.t3}, {"t4", lm.t4}};
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

ElicitOptions elicit_options(const RegionConfig& config) {
  ElicitOptions e;
  e.threshold_cv = config.threshold_cv;
  e.index_flood_method = config.index_flood_method;
  return e;
}

// Kernel density of `draws` on `grid`, Silverman bandwidth.
std::vector<double> kde(std::vector<double> draws, const std::vector<double>& grid) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : draws) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const auto q = [&](double p) { return draws[static_cast<std::size_t>(p * (n - 1.0))]; };
  const double iqr = q(0.75) - q(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  const double h = std::max(0.9 * spread * std::pow(n, -0.2), 1e-12);
  std::vector<double> out;
  for (double g : grid) {
    // Only kernels within 8 bandwidths contribute.
    const auto lo = std::lower_bound(draws.begin(), draws.end(), g - 8.0 * h);
    const auto hi = std::upper_bound(draws.begin(), draws.end(), g + 8.0 * h);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double z = (g - *it) / h;
      s += std::exp(-0.5 * z * z);
    }
    out.push_back(s / (n * h * std::sqrt(2.0 * kPi)));
  }
  return out;
}

void write_plot_data(const fs::path& dir, const PriorSpec& prior, const PosteriorChains& chains,
                     const PotSeries& pot) {
  const std::vector<GpParams> draws = chains.pooled();
  static const char* kNames[3] = {"log_location", "log_scale", "shape"};
  std::ostringstream dens;
  dens << "parameter,value,prior_density,posterior_density\n";
  for (int k = 0; k < 3; ++k) {
    std::vector<double> v;
    v.reserve(draws.size());
    for (const auto& d : draws) {
      v.push_back(k == 0 ? std::log(d.location) : k == 1 ? std::log(d.scale) : d.shape);
    }
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double p_lo = sorted[sorted.size() / 1000];
    const double p_hi = sorted[sorted.size() - 1 - sorted.size() / 1000];
    const double width = std::max(p_hi - p_lo, 1e-9);
    const double centre = 0.5 * (p_lo + p_hi);
    const double sd = std::sqrt(prior.d[k]);
    double lo = std::min(p_lo - 0.25 * width, prior.gamma[k] - 3.0 * sd);
    double hi = std::max(p_hi + 0.25 * width, prior.gamma[k] + 3.0 * sd);
    lo = std::max(lo, centre - 10.0 * width);
    hi = std::min(hi, centre + 10.0 * width);
    constexpr int kGrid = 201;
    std::vector<double> grid(kGrid);
    for (int i = 0; i < kGrid; ++i) grid[i] = lo + (hi - lo) * i / (kGrid - 1);
    const std::vector<double> post = kde(v, grid);
    for (int i = 0; i < kGrid; ++i) {
      const double z = (grid[i] - prior.gamma[k]) / sd;
      const double prior_d = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * kPi));
      dens << kNames[k] << ',' << format_number(grid[i]) << ',' << format_number(prior_d) << ','
           << format_number(post[i]) << '\n';
    }
  }
  write_text(dir / "density.csv", dens.str());

  static const std::vector<double> kPeriods{1.1, 1.25, 1.5, 2,  3,   5,   7,   10,  15,
                                            20,  30,   50,  70, 100, 200, 500, 1000};
  const double lambda = pot.rate();
  std::vector<double> periods;
  for (double t : kPeriods) {
    if (lambda * t > 1.0) periods.push_back(t);
  }
  const auto q = posterior_quantiles(chains, lambda, periods, 0.90);
  std::ostringstream curve;
  curve << "return_period,posterior_median,lower_90,upper_90\n";
  for (const auto& s : q) {
    curve << format_number(s.period) << ',' << format_number(s.point) << ','
          << format_number(s.lower) << ',' << format_number(s.upper) << '\n';
  }
  write_text(dir / "frequency_curve.csv", curve.str());

  // Observed exceedances at their empirical return periods (Weibull positions).
  std::vector<double> x = pot.peaks;
  std::sort(x.begin(), x.end(), std::greater<>());
  std::ostringstream obs;
  obs << "return_period,discharge_m3s\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (static_cast<double>(x.size()) + 1.0) / ((i + 1.0) * lambda);
    obs << format_number(t) << ',' << format_number(x[i]) << '\n';
  }
  write_text(dir / "observed.csv", obs.str());
}

json diagnostics_json(const ChainDiagnostics& d) {
  static const char* kNames[3] = {"log_location", "log_scale", "shape"};
  json params = json::object();
  for (int k = 0; k < 3; ++k) {
    params[kNames[k]] = {{"rhat", d.rhat_available ? json(d.params[k].rhat) : json(nullptr)},
                         {"ess", d.params[k].ess}};
  }
  return {{"parameters", params}, {"acceptance", d.acceptance}, {"rhat_available", d.rhat_available}};
}

}  // namespace

DischargeSeries synth_series(const PotSeries& pot, std::uint64_t seed) {
  Rng rng(seed);
  const auto days = static_cast<std::size_t>((pot.record_end - pot.record_start) / 86400 + 1);
  const double phase = 2.0 * kPi * rng.uniform();
  DischargeSeries s;
  s.code = pot.code;
  s.time.resize(days);
  s.discharge.resize(days);
  // Seasonal base flow with AR(1) noise, far below the threshold.
  double ar = 0.0;
  for (std::size_t d = 0; d < days; ++d) {
    ar = 0.9 * ar + std::sqrt(1.0 - 0.81) * rng.normal();
    const double season = 1.0 + 0.5 * std::sin(2.0 * kPi * d / kDaysPerYear + phase);
    s.time[d] = pot.record_start + static_cast<Timestamp>(d) * 86400;
    s.discharge[d] = 0.06 * pot.threshold * season * std::exp(0.1 * ar);
  }
  for (std::size_t e = 0; e < pot.peaks.size(); ++e) {
    const auto day = static_cast<std::ptrdiff_t>((pot.times[e] - pot.record_start) / 86400);
    const double x = pot.peaks[e];
    for (std::ptrdiff_t k = -2; k <= 8; ++k) {
      const std::ptrdiff_t d = day + k;
      if (d < 0 || d >= static_cast<std::ptrdiff_t>(days)) continue;
      const double f = k == 0 ? 1.0 : k < 0 ? std::pow(0.3, -k) : std::pow(0.35, k);
      s.discharge[d] = std::max(s.discharge[d], x * f);
    }
  }
  return s;
}

json cmd_extract(const ExtractOptions& o, std::ostream& out) {
  if (o.threshold && o.target_rate) {
    throw InputError("extract: give either --threshold or --target-rate, not both");
  }
  const std::string code = o.code.empty() ? o.series.stem().string() : o.code;
  const DischargeSeries series = read_series_csv(o.series, code);
  double threshold = 0.0;
  std::optional<double> target = o.target_rate;
  if (o.threshold) {
    threshold = *o.threshold;
  } else {
    if (!target) target = 2.0;
    threshold = select_threshold(series, *target, o.rule).threshold;
  }
  const PotSeries pot = extract_pot(series, threshold, o.rule);
  json j = to_json(pot, o.rule);
  if (target) j["target_events_per_year"] = *target;
  write_json(o.out, j);
  out << pot.code << ": threshold " << fixed(pot.threshold, 3) << " m3/s, " << pot.peaks.size()
      << " events over " << fixed(pot.record_years) << " years, achieved rate "
      << fixed(pot.rate(), 3) << " events/year\n";
  return j;
}

json cmd_fit(const FitOptions& o, std::ostream& out) {
  if (!(o.level > 0.0 && o.level < 1.0)) throw InputError("fit: --ci must lie in (0, 1)");
  const PotSeries pot = read_pot_file(o.pot);
  const GpFit fit = gp_fit(pot, o.method);
  const double lambda = pot.rate();
  const bool profile = o.method == FitMethod::MLE;
  const std::string ci_kind = profile ? "profile" : fit.has_covariance() ? "asymptotic" : "none";

  json quantiles = json::array();
  std::vector<ConfidenceInterval> cis;
  for (double t : o.periods) {
    ConfidenceInterval ci;
    if (profile) {
      ci = profile_ci(pot, lambda, t, o.level);
    } else if (fit.has_covariance()) {
      ci = delta_ci(fit, lambda, t, o.level);
    } else {
      ci.estimate = return_level(fit.params, lambda, t);
      ci.lower = ci.upper = std::numeric_limits<double>::quiet_NaN();
    }
    cis.push_back(ci);
    json q = to_json(ci);
    q["period"] = t;
    quantiles.push_back(q);
  }
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "fit"},
            {"code", pot.code},
            {"method", to_string(o.method)},
            {"n", fit.n},
            {"events_per_year", lambda},
            {"record_years", pot.record_years},
            {"params", to_json(fit.params)},
            {"loglik", fit.loglik},
            {"covariance", matrix_json(fit.covariance)},
            {"bootstrap_covariance", fit.bootstrap_covariance},
            {"ci_kind", ci_kind},
            {"level", o.level},
            {"quantiles", quantiles}};
  if (o.out) write_json(*o.out, j);

  out << pot.code << "  method " << to_string(o.method) << "  n = " << fit.n << "  lambda = "
      << fixed(lambda, 3) << " events/year\n";
  out << "  location " << fixed(fit.params.location, 3) << "  scale " << fixed(fit.params.scale, 3)
      << "  shape " << fixed(fit.params.shape, 3) << "\n";
  const int pct = static_cast<int>(std::lround(o.level * 100.0));
  if (profile) {
    out << "  " << pct << "% profile likelihood confidence intervals in brackets\n";
  } else if (fit.has_covariance()) {
    out << "  " << pct << "% asymptotic (delta-method) intervals in brackets; no profile intervals for "
        << to_string(o.method) << (fit.bootstrap_covariance ? " (bootstrap covariance)" : "") << "\n";
  } else {
    out << "  no intervals: covariance unavailable for this fit\n";
  }
  std::vector<std::string> cells;
  std::size_t width = 8;
  for (const auto& ci : cis) {
    cells.push_back(bracket(ci));
    width = std::max(width, cells.back().size() + 2);
  }
  out << pad_right("Code", 10);
  for (double t : o.periods) out << pad(period_label(t), width);
  out << "\n" << pad_right(pot.code, 10);
  for (const auto& c : cells) out << pad(c, width);
  out << "\n";
  return j;
}

json cmd_region(const RegionOptions& o, std::ostream& out) {
  const RegionConfig config = read_region_config(o.config);
  const Region region = build_region(config);
  const bool do_check = o.check || !o.growth;
  const bool do_growth = o.growth || !o.check;
  json j = {{"schema_version", kSchemaVersion}, {"kind", "region"}, {"sites", json::array()}};
  for (const auto& s : region.sites) {
    j["sites"].push_back({{"code", s.meta.code},
                          {"threshold", s.pot.threshold},
                          {"events", s.pot.peaks.size()},
                          {"record_years", s.pot.record_years}});
  }

  if (do_check) {
    if (region.sites.size() >= 4) {
      const DiscordancyReport d = discordancy(region);
      out << "Discordancy (critical value " << fixed(d.critical_value, 3) << ")\n";
      out << pad_right("Code", 10) << pad("t", 9) << pad("t3", 9) << pad("t4", 9) << pad("D", 9)
          << "\n";
      json rows = json::array();
      for (const auto& r : d.rows) {
        out << pad_right(r.code, 10) << pad(fixed(r.t, 3), 9) << pad(fixed(r.t3, 3), 9)
            << pad(fixed(r.t4, 3), 9) << pad(fixed(r.d, 2), 9) << (r.discordant ? "  discordant" : "")
            << "\n";
        rows.push_back({{"code", r.code},
                        {"t", r.t},
                        {"t3", r.t3},
                        {"t4", r.t4},
                        {"d", r.d},
                        {"discordant", r.discordant}});
      }
      j["discordancy"] = {{"critical_value", d.critical_value}, {"rows", rows}};
    } else {
      out << "Discordancy skipped: needs at least 4 sites\n";
    }
    if (o.nsim < 100) {
      const std::string w = "Nsim = " + std::to_string(o.nsim) +
                            " is below the recommended minimum of 100";
      out << "warning: " << w << "\n";
      j["warnings"].push_back(w);
    }
    const HeterogeneityReport h = heterogeneity(region, o.nsim, o.seed, o.threads);
    out << "Heterogeneity (Nsim = " << h.nsim << ", seed " << h.seed << ", "
        << (h.gp_fallback ? "GP" : "kappa") << " parent)\n";
    for (int k = 0; k < 3; ++k) {
      out << "  H" << k + 1 << " = " << fixed(h.h[k]) << "\n";
    }
    out << "  classification: " << h.classification() << "\n";
    if (h.correlation_note()) {
      out << "  note: H1 <= 0 may indicate correlation between sites\n";
    }
    j["heterogeneity"] = {{"h", h.h},
                          {"v_observed", h.v_obs},
                          {"sim_mean", h.sim_mean},
                          {"sim_sd", h.sim_sd},
                          {"regional", to_json(h.regional)},
                          {"kappa",
                           {{"location", h.kappa.location},
                            {"scale", h.kappa.scale},
                            {"k", h.kappa.k},
                            {"h", h.kappa.h}}},
                          {"gp_fallback", h.gp_fallback},
                          {"nsim", h.nsim},
                          {"seed", h.seed},
                          {"classification", h.classification()},
                          {"correlation_note", h.correlation_note()}};
  }

  if (do_growth) {
    const GrowthCurve c = growth_curve(region, {}, config.rescale_mode, config.index_flood_method);
    json curve = {{"schema_version", kSchemaVersion},
                  {"kind", "growth_curve"},
                  {"params", to_json(c.params)},
                  {"members", c.members},
                  {"rescale_mode", to_string(c.mode)},
                  {"p_index", c.p_index},
                  {"events_per_year", c.rate},
                  {"regional", to_json(c.regional)}};
    out << "Growth curve (" << to_string(c.mode) << ", " << c.members.size() << " sites): location "
        << fixed(c.params.location, 3) << "  scale " << fixed(c.params.scale, 3) << "  shape "
        << fixed(c.params.shape, 3) << "\n";
    json factors = json::array();
    for (double t : {2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
      const double g = gp_quantile(c.params, return_probability(c.rate, t));
      factors.push_back({{"period", t}, {"growth_factor", g}});
      out << "  " << pad_right(period_label(t), 6) << fixed(g, 3) << "\n";
    }
    curve["growth_factors"] = factors;
    if (o.curve_out) write_json(*o.curve_out, curve);
    j["growth_curve"] = curve;
  }
  if (o.out) write_json(*o.out, j);
  return j;
}

json cmd_bayes(const BayesOptions& o, std::ostream& out) {
  const RegionConfig config = read_region_config(o.config);
  Region region = build_region(config);
  region.target = o.target.empty() ? config.target : o.target;
  if (region.target.empty()) throw InputError("bayes: no target given (--target or config)");
  const PotSeries& pot = region.site(region.target).pot;

  PriorSpec prior = elicit_prior(region, region.target, elicit_options(config));
  if (o.flat_prior) prior = flat_prior(prior);
  const PosteriorChains chains = mcmc_sample(prior, pot.peaks, o.mcmc, o.seed);
  const ChainDiagnostics diag = chain_diagnostics(chains);
  const double lambda = pot.rate();
  const auto quantiles = posterior_quantiles(chains, lambda, o.periods, o.level);

  json prior_json = to_json(prior);
  prior_json["flat"] = o.flat_prior;
  json qj = json::array();
  for (const auto& q : quantiles) {
    qj.push_back({{"period", q.period}, {"median", q.point}, {"lower", q.lower}, {"upper", q.upper}});
  }
  json summary = {{"schema_version", kSchemaVersion},
                  {"kind", "posterior"},
                  {"target", region.target},
                  {"seed", o.seed},
                  {"flat_prior", o.flat_prior},
                  {"mcmc",
                   {{"chains", o.mcmc.chains},
                    {"iterations", o.mcmc.iterations},
                    {"burn_in", o.mcmc.burn_in},
                    {"thin", o.mcmc.thin},
                    {"proposal_sd", o.mcmc.proposal_sd},
                    {"adapt", o.mcmc.adapt}}},
                  {"events_per_year", lambda},
                  {"retained_draws", chains.retained()},
                  {"diagnostics", diagnostics_json(diag)},
                  {"warnings", chains.warnings},
                  {"level", o.level},
                  {"quantiles", qj}};
  if (o.prior_out) write_json(*o.prior_out, prior_json);
  if (o.posterior_out) {
    json full = summary;
    json cj = json::array();
    for (const auto& c : chains.chains) {
      json loc = json::array(), scale = json::array(), shape = json::array();
      for (const auto& d : c.draws) {
        loc.push_back(d.location);
        scale.push_back(d.scale);
        shape.push_back(d.shape);
      }
      cj.push_back({{"acceptance", c.acceptance},
                    {"final_proposal_sd", c.final_proposal_sd},
                    {"location", loc},
                    {"scale", scale},
                    {"shape", shape}});
    }
    full["chains"] = cj;
    write_json(*o.posterior_out, full);
  }
  if (o.plot_dir) write_plot_data(*o.plot_dir, prior, chains, pot);
  json j = {{"schema_version", kSchemaVersion}, {"kind", "bayes"}, {"prior", prior_json},
            {"posterior", summary}};
  if (o.out) write_json(*o.out, j);

  out << "Prior for " << region.target << (o.flat_prior ? " (flat, d = 1000)" : "") << " from "
      << prior.sites.size() << " sites, predicted index flood " << fixed(prior.c_hat, 3)
      << " m3/s\n";
  static const char* kNames[3] = {"log location", "log scale", "shape"};
  for (int k = 0; k < 3; ++k) {
    out << "  " << pad_right(kNames[k], 14) << "gamma " << pad(fixed(prior.gamma[k], 4), 9)
        << "  d " << fixed(prior.d[k], 4) << "\n";
  }
  out << "MCMC: " << o.mcmc.chains << " chains x " << o.mcmc.iterations << " iterations, burn-in "
      << o.mcmc.burn_in << ", seed " << o.seed << ", " << chains.retained() << " retained draws\n";
  for (int k = 0; k < 3; ++k) {
    out << "  " << pad_right(kNames[k], 14) << "R-hat "
        << (diag.rhat_available ? fixed(diag.params[k].rhat, 3) : "NA") << "  ESS "
        << fixed(diag.params[k].ess, 0) << "\n";
  }
  for (const auto& w : chains.warnings) out << "  warning: " << w << "\n";
  const int pct = static_cast<int>(std::lround(o.level * 100.0));
  out << "Posterior medians with " << pct << "% credible intervals in brackets\n";
  std::size_t width = 8;
  std::vector<std::string> cells;
  for (const auto& q : quantiles) {
    cells.push_back(fixed(q.point) + " (" + fixed(q.lower) + ", " + fixed(q.upper) + ")");
    width = std::max(width, cells.back().size() + 2);
  }
  out << pad_right("Code", 10);
  for (double t : o.periods) out << pad(period_label(t), width);
  out << "\n" << pad_right(region.target, 10);
  for (const auto& c : cells) out << pad(c, width);
  out << "\n";
  return j;
}

json cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  const RegionConfig config = read_region_config(o.config);
  const Region region = build_region(config);
  if (region.target.empty()) throw InputError("evaluate: the config has no target");
  EvalConfig eval = o.eval;
  eval.rescale = config.rescale_mode;
  eval.index_flood_method = config.index_flood_method;
  eval.elicit = elicit_options(config);

  std::optional<std::vector<double>> truth;
  if (o.use_truth) {
    if (!config.ground_truth) throw InputError("evaluate: the config has no ground_truth file");
    const GroundTruth gt = read_ground_truth(*config.ground_truth);
    const auto it = std::find_if(gt.sites.begin(), gt.sites.end(),
                                 [&](const SiteTruth& s) { return s.code == region.target; });
    if (it == gt.sites.end()) throw InputError("evaluate: ground truth lacks the target");
    truth.emplace();
    for (double t : eval.periods) truth->push_back(return_level(it->params, it->rate, t));
  }
  const EvalReport report = run_experiment(eval, region, truth);

  json models = json::array();
  for (Model m : eval.models) models.push_back(to_string(m));
  json bench = json::array();
  for (const auto& b : report.benchmark) {
    json e = to_json(b.ci);
    e["period"] = b.period;
    e["reliable"] = b.reliable;
    bench.push_back(e);
  }
  json lengths = json::array();
  for (const auto& lr : report.lengths) {
    json rows = json::array();
    for (const auto& r : lr.rows) {
      json cells = json::array();
      for (std::size_t t = 0; t < r.cells.size(); ++t) {
        cells.push_back({{"period", report.periods[t]},
                         {"nbias", r.cells[t].k > 0 ? json(r.cells[t].nbias) : json(nullptr)},
                         {"nrmse", r.cells[t].k > 0 ? json(r.cells[t].nrmse) : json(nullptr)},
                         {"k", r.cells[t].k}});
      }
      rows.push_back({{"model", to_string(r.model)},
                      {"cells", cells},
                      {"rank_raw", r.rank_raw},
                      {"rank_score", std::isfinite(r.rank_score) ? json(r.rank_score) : json(nullptr)},
                      {"failures", r.failures}});
    }
    lengths.push_back({{"m", lr.m}, {"rows", rows}});
  }
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "evaluation"},
            {"target", report.target},
            {"seed", report.seed},
            {"replicates", report.replicates},
            {"anchor", to_string(eval.anchor)},
            {"sliding", eval.sliding},
            {"reference", truth ? "ground_truth" : "benchmark"},
            {"periods", report.periods},
            {"models", models},
            {"benchmark", bench},
            {"lengths", lengths},
            {"failures", report.failures}};
  if (o.out) write_json(*o.out, j);

  out << "Target " << report.target << ", seed " << report.seed << ", " << report.replicates
      << " replicate(s), anchor " << to_string(eval.anchor) << (eval.sliding ? " (sliding)" : "")
      << "\n";
  if (!report.benchmark.empty()) {
    out << "Benchmark: full-record MLE with " << fixed(eval.level * 100.0, 0)
        << "% profile likelihood intervals\n";
    for (const auto& b : report.benchmark) {
      out << "  " << pad_right(period_label(b.period), 6) << bracket(b.ci)
          << (b.reliable ? "" : "  (unreliable: period long relative to the record)") << "\n";
    }
  } else {
    out << "Reference: true quantiles from the ground-truth file\n";
  }
  for (const auto& lr : report.lengths) {
    out << "\nm = " << lr.m << " years\n" << pad_right("Model", 8);
    for (const char* crit : {"NRMSE", "NBIAS"}) {
      for (double t : report.periods) out << pad(std::string(crit) + " " + period_label(t), 13);
    }
    out << pad("Rank Score", 12) << "\n";
    for (const auto& r : lr.rows) {
      out << pad_right(to_string(r.model), 8);
      for (const auto& c : r.cells) out << pad(c.k > 0 ? fixed(c.nrmse) : "NA", 13);
      for (const auto& c : r.cells) out << pad(c.k > 0 ? fixed(c.nbias) : "NA", 13);
      out << pad(fixed(r.rank_score), 12);
      if (r.failures > 0) out << "  (" << r.failures << " failed)";
      out << "\n";
    }
  }
  for (const auto& f : report.failures) out << "failed: " << f << "\n";
  return j;
}

json cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  const SyntheticRegion syn = synth_region(o.spec);
  const fs::path& dir = o.out_dir;
  RegionConfig config;
  config.target = syn.region.target;
  config.target_rate.reset();
  config.ground_truth = "ground_truth.json";
  std::vector<StationMeta> meta;
  for (std::size_t i = 0; i < syn.region.sites.size(); ++i) {
    const Site& site = syn.region.sites[i];
    const fs::path rel = fs::path("series") / (site.meta.code + ".csv");
    write_series_csv(dir / rel, synth_series(site.pot, derive_seed(o.spec.seed, 1000 + i)));
    meta.push_back(site.meta);
    config.stations.push_back({site.meta.code, "metadata.csv", rel, site.pot.threshold});
  }
  write_metadata_csv(dir / "metadata.csv", meta);
  write_json(dir / "ground_truth.json", to_json(GroundTruth{syn.truth, o.spec.growth}));
  json cj = to_json(config);
  write_json(dir / "region.json", cj);
  out << "Wrote " << syn.region.sites.size() << " sites (" << o.spec.years << " years, seed "
      << o.spec.seed << ") to " << dir.string() << "\n";
  return {{"schema_version", kSchemaVersion},
          {"kind", "simulation"},
          {"sites", syn.region.sites.size()},
          {"config", cj}};
}

}  // namespace regflood::cli
