// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any
// failure. Optional arguments select criteria by number.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <unistd.h>

#include "commands.hpp"
#include "oracles.hpp"
#include "regflood/bayes.hpp"
#include "regflood/eval.hpp"
#include "regflood/fit.hpp"
#include "regflood/lmoments.hpp"
#include "regflood/regional.hpp"
#include "regflood/rng.hpp"

namespace fs = std::filesystem;
using namespace regflood;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// 1. Table 4 rank scores from its own NRMSE / NBIAS columns.
Outcome rank_score_reproduction() {
  const std::vector<std::string> names{"MLE", "bHe+", "rHe+", "bHe", "rHe",
                                       "bHo", "rHo",  "bHo+", "rHo+"};
  const std::vector<std::vector<double>> table{
      {0.33, 0.34, 0.39, 0.01, -0.09, -0.18}, {0.16, 0.13, 0.18, 0.09, -0.02, -0.13},
      {0.27, 0.30, 0.37, -0.12, -0.22, -0.31}, {0.10, 0.07, 0.11, 0.08, 0.00, -0.09},
      {0.27, 0.26, 0.28, -0.03, -0.10, -0.17}, {0.14, 0.09, 0.08, 0.12, 0.05, -0.02},
      {0.27, 0.26, 0.27, 0.01, -0.06, -0.12},  {0.29, 0.28, 0.25, 0.29, 0.27, 0.25},
      {0.28, 0.27, 0.26, 0.02, -0.01, -0.04}};
  const std::vector<double> printed{0.26, 0.65, 0.18, 0.85, 0.43, 0.76, 0.58, 0.19, 0.60};
  const RankScores rs = rank_scores(table);
  double worst = 0.0;
  for (std::size_t i = 0; i < printed.size(); ++i) {
    worst = std::max(worst, std::abs(rs.standardized[i] - printed[i]));
  }
  const bool ok = std::abs(rs.standardized[0] - 0.26) <= 0.01 &&
                  std::abs(rs.standardized[3] - 0.85) <= 0.01 && worst <= 0.02;
  return {ok, "MLE " + num(rs.standardized[0]) + " (0.26), bHe " + num(rs.standardized[3]) +
                  " (0.85), max deviation " + num(worst) + " (tol 0.02)"};
}

// 2. Quantile identity of gp_rescale and scale equivariance of the MLE.
Outcome scaling_theorem() {
  Rng rng(20240101);
  double worst_q = 0.0, worst_mle = 0.0;
  const std::array<double, 6> probs{0.01, 0.1, 0.5, 0.9, 0.99, 0.999};
  for (int i = 0; i < 100; ++i) {
    const GpParams p{10.0 * rng.uniform(), 0.1 + 9.9 * rng.uniform(), -0.4 + 0.9 * rng.uniform()};
    const double c = std::exp(std::log(0.01) + std::log(1e4) * rng.uniform());
    const GpParams scaled = gp_rescale(p, c);
    for (double u : probs) {
      const double a = gp_quantile(scaled, u);
      const double b = c * gp_quantile(p, u);
      worst_q = std::max(worst_q, std::abs(a - b) / std::abs(b));
    }
    const std::vector<double> x = gp_sample(p, 200, derive_seed(7, i));
    std::vector<double> cx(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) cx[j] = c * x[j];
    const GpFit f1 = gp_fit_mle(x, p.location);
    const GpFit f2 = gp_fit_mle(cx, c * p.location);
    worst_mle = std::max({worst_mle, std::abs(f2.params.scale / (c * f1.params.scale) - 1.0),
                          std::abs(f2.params.shape - f1.params.shape) /
                              std::max(1.0, std::abs(f1.params.shape))});
  }
  return {worst_q <= 1e-10 && worst_mle <= 1e-6,
          "quantile identity max rel err " + sci(worst_q) + " (tol 1e-10), MLE equivariance " +
              sci(worst_mle) + " (tol 1e-6)"};
}

// 3. Unbiased sample L-moments against the order-statistic U-statistics in
// exact rational arithmetic, every multiset of size 1..8 from a fixed pool.
Outcome lmoment_oracle() {
  const std::vector<std::int64_t> pool{-7, 0, 1, 2, 3, 5, 8, 21};
  std::size_t samples = 0, mismatches = 0;
  std::function<void(std::vector<std::int64_t>&, std::size_t)> visit =
      [&](std::vector<std::int64_t>& sample, std::size_t from) {
        if (!sample.empty()) {
          ++samples;
          std::vector<oracle::Rational> exact(sample.begin(), sample.end());
          const auto l = lmoments_from_sorted<oracle::Rational>(exact, PwmVariant::Unbiased,
                                                                oracle::Rational(0));
          const int n = static_cast<int>(sample.size());
          for (int r = 1; r <= std::min(n, 4); ++r) {
            if (l[r - 1] != oracle::brute_force_lmoment(sample, r)) ++mismatches;
          }
        }
        if (sample.size() == 8) return;
        for (std::size_t i = from; i < pool.size(); ++i) {
          sample.push_back(pool[i]);
          visit(sample, i);
          sample.pop_back();
        }
      };
  std::vector<std::int64_t> sample;
  visit(sample, 0);
  return {mismatches == 0 && samples == 12869,
          std::to_string(samples) + " samples, " + std::to_string(mismatches) +
              " exact mismatches"};
}

// 4. H1 null calibration and power.
Outcome heterogeneity_calibration() {
  constexpr int kRegions = 50;
  double sum_h = 0.0;
  int powered = 0;
  for (int r = 0; r < kRegions; ++r) {
    SynthSpec spec;
    spec.years = 30;
    spec.poisson_counts = false;  // n_i = 60
    spec.seed = derive_seed(4001, r);
    sum_h += heterogeneity(synth_region(spec).region, 500, derive_seed(4002, r)).h[0];
    spec.lcv_dispersion = 2.0;
    if (heterogeneity(synth_region(spec).region, 500, derive_seed(4003, r)).h[0] > 2.0) {
      ++powered;
    }
  }
  const double mean_h = sum_h / kRegions;
  const double power = static_cast<double>(powered) / kRegions;
  return {mean_h >= -0.6 && mean_h <= 0.6 && power >= 0.9,
          "homogeneous mean H1 " + num(mean_h) + " (in [-0.6, 0.6]), dispersion 2: H1 > 2 in " +
              num(100.0 * power, 0) + "% (>= 90%)"};
}

// 5. With no data the sampler must reproduce the prior marginals.
Outcome prior_targeting() {
  PriorSpec prior;
  prior.gamma = {std::log(12.0), std::log(4.0), 0.15};
  prior.d = {0.04, 0.09, 0.01};
  McmcConfig cfg;
  cfg.chains = 4;
  cfg.thin = 10;
  cfg.burn_in = 2000;
  cfg.iterations = cfg.burn_in + 5000 * cfg.thin;  // 20000 retained
  const PosteriorChains chains = mcmc_sample(prior, {}, cfg, 5005);
  const ChainDiagnostics diag = chain_diagnostics(chains);
  const auto draws = chains.pooled();
  bool ok = draws.size() == 20000;
  std::ostringstream detail;
  detail << draws.size() << " draws;";
  for (int k = 0; k < 3; ++k) {
    std::vector<double> v;
    for (const auto& d : draws) {
      v.push_back(k == 0 ? std::log(d.location) : k == 1 ? std::log(d.scale) : d.shape);
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    const double sd = std::sqrt(prior.d[k]);
    const double mcse = sd / std::sqrt(diag.params[k].ess);
    const double z = std::abs(mean - prior.gamma[k]) / mcse;
    const double ks = oracle::ks_normal(v, prior.gamma[k], sd);
    ok = ok && z <= 3.0 && ks < 0.02;
    detail << " theta" << k + 1 << ": |z| " << num(z, 2) << " KS " << num(ks, 4) << ";";
  }
  detail << " (|z| <= 3, KS < 0.02)";
  return {ok, detail.str()};
}

// 6. Uninformative prior, n = 5000: posterior medians inside the MLE bands.
Outcome posterior_consistency() {
  const GpParams truth{10.0, 5.0, 0.1};
  const std::vector<double> x = gp_sample(truth, 5000, 6006);
  PriorSpec prior;
  prior.gamma = {0.0, 0.0, 0.0};
  prior.d = {1000.0, 1000.0, 1000.0};
  McmcConfig cfg;
  cfg.chains = 4;
  cfg.iterations = 4000;
  cfg.burn_in = 1500;
  const PosteriorChains chains = mcmc_sample(prior, x, cfg, 6007);
  std::vector<double> s, k;
  for (const auto& d : chains.pooled()) {
    s.push_back(d.scale);
    k.push_back(d.shape);
  }
  std::sort(s.begin(), s.end());
  std::sort(k.begin(), k.end());
  const double med_s = s[s.size() / 2];
  const double med_k = k[k.size() / 2];
  const GpFit fit = gp_fit_mle(x, truth.location);
  const double z = boost::math::quantile(boost::math::normal(), 0.95);
  const double se_s = std::sqrt(fit.covariance(0, 0));
  const double se_k = std::sqrt(fit.covariance(1, 1));
  const bool in_s = std::abs(med_s - fit.params.scale) <= z * se_s;
  const bool in_k = std::abs(med_k - fit.params.shape) <= z * se_k;
  return {in_s && in_k, "scale median " + num(med_s) + " in MLE band [" +
                            num(fit.params.scale - z * se_s) + ", " +
                            num(fit.params.scale + z * se_s) + "]: " + (in_s ? "yes" : "no") +
                            "; shape median " + num(med_k) + " in [" +
                            num(fit.params.shape - z * se_k) + ", " +
                            num(fit.params.shape + z * se_k) + "]: " + (in_k ? "yes" : "no")};
}

// 7. Truncated-target comparison on a homogeneous synthetic region.
Outcome table4_ordering() {
  EvalConfig cfg;
  cfg.lengths = {5};
  cfg.replicates = 100;
  cfg.seed = 7007;
  SynthSpec spec;
  const EvalReport report = run_synthetic_experiment(cfg, spec);
  const auto& rows = report.lengths.front().rows;
  auto row = [&](Model m) -> const ModelRow& {
    for (const auto& r : rows) {
      if (r.model == m) return r;
    }
    return rows.front();
  };
  const ModelRow& bay = row(Model::BAY);
  const ModelRow& mle = row(Model::MLE);
  const ModelRow& reg = row(Model::REG);
  const double bay10 = bay.cells[1].nrmse, mle10 = mle.cells[1].nrmse;
  const bool ok = bay10 < mle10 && bay.rank_score > reg.rank_score;
  std::ostringstream detail;
  detail << "NRMSE(Q10) BAY " << num(bay10) << " vs MLE " << num(mle10) << "; rank score";
  for (const auto& r : rows) detail << " " << to_string(r.model) << " " << num(r.rank_score, 2);
  detail << "; " << report.failures.size() << " failed cells";
  return {ok, detail.str()};
}

// 8. The elicited prior never depends on the target's exceedances.
Outcome leave_target_out() {
  SynthSpec spec;
  spec.seed = 8008;
  const SyntheticRegion syn = synth_region(spec);
  const PriorSpec base = elicit_prior(syn.region, syn.region.target);
  const std::string before = cli::to_json(base).dump();
  Region mutated = syn.region;
  Site& target = mutated.sites[mutated.index_of(mutated.target)];
  Rng rng(8009);
  for (double& x : target.pot.peaks) {
    x = target.pot.threshold + (x - target.pot.threshold) * (0.2 + 5.0 * rng.uniform()) + 1.0;
  }
  target.pot.peaks.resize(target.pot.peaks.size() / 2);
  target.pot.times.resize(target.pot.peaks.size());
  const std::string after = cli::to_json(elicit_prior(mutated, mutated.target)).dump();
  const bool identical = before == after;

  // Negative paths: target wired into the pseudo-sites or the regression.
  std::vector<PseudoSite> pseudo;
  std::vector<AreaPoint> points;
  for (const auto& site : syn.region.sites) {
    pseudo.push_back(pseudo_site(site));
    points.push_back({site.meta.code, site.meta.area_km2, pseudo.back().index_flood});
  }
  int codes_ok = 0;
  const AreaRegression leaky = fit_area_regression(points);
  const AreaRegression clean = fit_area_regression(points, syn.region.target);
  std::vector<PseudoSite> clean_pseudo;
  for (const auto& p : pseudo) {
    if (p.code != syn.region.target) clean_pseudo.push_back(p);
  }
  for (int variant = 0; variant < 2; ++variant) {
    try {
      if (variant == 0) {
        elicit_prior(syn.region, syn.region.target, clean, pseudo);
      } else {
        elicit_prior(syn.region, syn.region.target, leaky, clean_pseudo);
      }
    } catch (const std::exception& e) {
      if (cli::exit_code(e) == 3) ++codes_ok;
    }
  }
  return {identical && codes_ok == 2,
          std::string("prior ") + (identical ? "byte-identical" : "CHANGED") +
              " after mutating the target; leakage paths exiting with code 3: " +
              std::to_string(codes_ok) + "/2"};
}

// 9. Frequentist coverage of 90% credible intervals for Q10.
Outcome credible_calibration() {
  constexpr int kReps = 200;
  int covered = 0, done = 0;
  McmcConfig cfg;
  cfg.chains = 4;
  cfg.iterations = 6000;
  cfg.burn_in = 2000;
  cfg.threads = 1;
  const std::array<double, 1> periods{10.0};
  for (int r = 0; r < kReps; ++r) {
    SynthSpec spec;
    spec.seed = derive_seed(9009, r);
    const SyntheticRegion syn = synth_region(spec);
    const SiteTruth& truth = syn.truth[static_cast<std::size_t>(spec.target)];
    const PriorSpec prior = elicit_prior(syn.region, syn.region.target);
    const auto& x = syn.region.site(syn.region.target).pot.peaks;
    const PosteriorChains chains = mcmc_sample(prior, x, cfg, derive_seed(9010, r));
    const auto q = posterior_quantiles(chains, truth.rate, periods, 0.90).front();
    const double q10 = return_level(truth.params, truth.rate, 10.0);
    if (q.lower <= q10 && q10 <= q.upper) ++covered;
    ++done;
  }
  const double rate = static_cast<double>(covered) / done;
  return {rate >= 0.84 && rate <= 0.96,
          "coverage " + num(rate) + " over " + std::to_string(done) + " replicates (in [0.84, 0.96])"};
}

// 10. Every seeded command twice; machine outputs must match byte for byte.
Outcome determinism() {
  const fs::path root =
      fs::temp_directory_path() / ("regflood-accept-" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto run_all = [&](const fs::path& dir) {
    const std::string d = dir.string();
    const std::vector<std::vector<std::string>> commands{
        {"simulate", "--sites", "6", "--years", "20", "--seed", "11", "-o", d + "/region"},
        {"extract", d + "/region/series/S02.csv", "--target-rate", "2", "-o", d + "/pot.json"},
        {"fit", d + "/pot.json", "-o", d + "/fit_mle.json"},
        {"fit", d + "/pot.json", "--method", "pwb", "-o", d + "/fit_pwb.json"},
        {"region", d + "/region/region.json", "--nsim", "100", "--seed", "3", "-o",
         d + "/region_report.json", "--curve-out", d + "/curve.json"},
        {"bayes", d + "/region/region.json", "--iters", "3000", "--burn-in", "1000", "--seed", "5",
         "--prior-out", d + "/prior.json", "--posterior-out", d + "/posterior.json",
         "--plot-dir", d + "/plots", "-o", d + "/bayes.json"},
        {"evaluate", d + "/region/region.json", "--lengths", "5,10", "--iters", "2000",
         "--burn-in", "500", "--seed", "3", "-o", d + "/eval.json"}};
    int failures = 0;
    for (const auto& args : commands) {
      std::ostringstream out, err;
      if (cli::run(args, out, err) != 0) ++failures;
    }
    return failures;
  };
  const int fa = run_all(root / "a");
  const int fb = run_all(root / "b");
  std::size_t files = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path other = root / "b" / fs::relative(entry.path(), root / "a");
    if (!fs::exists(other) || oracle::slurp(entry.path()) != oracle::slurp(other)) ++differ;
  }
  fs::remove_all(root);
  return {fa == 0 && fb == 0 && differ == 0 && files > 10,
          std::to_string(files) + " output files compared, " + std::to_string(differ) +
              " differ, " + std::to_string(fa + fb) + " command failures"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  Outcome (*check)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "rank-score reproduction", 1.0, rank_score_reproduction},
      {2, "scaling theorem", 10.0, scaling_theorem},
      {3, "L-moment oracle", 30.0, lmoment_oracle},
      {4, "heterogeneity calibration", 300.0, heterogeneity_calibration},
      {5, "prior-targeting sampler", 60.0, prior_targeting},
      {6, "posterior consistency", 120.0, posterior_consistency},
      {7, "truncated-record ordering", 900.0, table4_ordering},
      {8, "leave-target-out contract", 10.0, leave_target_out},
      {9, "credible-interval calibration", 600.0, credible_calibration},
      {10, "determinism", 60.0, determinism}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s [%d] %s: %s; %.1f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : " TIME LIMIT EXCEEDED");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
