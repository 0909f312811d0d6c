#include <chrono>
#include <ostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "regflood/error.hpp"

#ifndef REGFLOOD_VERSION
#define REGFLOOD_VERSION "unknown"
#endif

namespace regflood::cli {
namespace {

std::string now_utc() {
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
      std::chrono::system_clock::now().time_since_epoch());
  return format_iso8601(secs.count()) + "Z";
}

void add_rule_options(CLI::App* cmd, IndependenceRule& rule) {
  cmd->add_option("--rule-gap", rule.min_gap_days, "Minimum days between independent peaks")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rule-trough", rule.trough_fraction,
                  "Flow between peaks must fall below this fraction of the smaller peak")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--missing-gap", rule.missing_gap_days,
                  "Sampling gaps longer than this many days count as missing")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ContractViolation*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 2;
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regional Bayesian flood frequency analysis of peaks-over-threshold data",
               "regflood"};
  app.set_version_flag("--version", REGFLOOD_VERSION);
  app.require_subcommand(1);
  std::string report_path;
  app.add_option("--report", report_path, "Write a run report (JSON) to this path");

  ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Extract independent peaks over a threshold");
  extract->add_option("series", ex.series, "Series CSV (datetime,discharge_m3s)")->required();
  extract->add_option("-o,--out", ex.out, "POT output file (JSON)")->required();
  extract->add_option("--code", ex.code, "Station code (default: file stem)");
  extract->add_option("--threshold", ex.threshold, "Threshold in m3/s");
  extract->add_option("--target-rate", ex.target_rate, "Events per year (default 2)")
      ->check(CLI::PositiveNumber);
  add_rule_options(extract, ex.rule);

  FitOptions fo;
  std::string method = "mle";
  auto* fit = app.add_subcommand("fit", "Fit a GP distribution to a POT file");
  fit->add_option("pot", fo.pot, "POT file written by extract")->required();
  fit->add_option("--method", method, "mle, pwu or pwb")
      ->check(CLI::IsMember({"mle", "pwu", "pwb"}, CLI::ignore_case));
  fit->add_option("--return-periods", fo.periods, "Return periods in years")->delimiter(',');
  fit->add_option("--ci", fo.level, "Confidence level");
  fit->add_option("-o,--out", fo.out, "JSON output file");

  RegionOptions ro;
  auto* region = app.add_subcommand("region", "Discordancy, heterogeneity and growth curve");
  region->add_option("config", ro.config, "Region config (JSON)")->required();
  region->add_flag("--check", ro.check, "Discordancy and heterogeneity only");
  region->add_flag("--growth-curve", ro.growth, "Growth curve only");
  region->add_option("--nsim", ro.nsim, "Simulated regions for H");
  region->add_option("--seed", ro.seed, "Random seed");
  region->add_option("--threads", ro.threads, "Worker threads (0 = all cores)");
  region->add_option("-o,--out", ro.out, "JSON report");
  region->add_option("--curve-out", ro.curve_out, "Growth curve file (JSON)");

  BayesOptions bo;
  auto* bayes = app.add_subcommand("bayes", "Elicit the regional prior and sample the posterior");
  bayes->add_option("config", bo.config, "Region config (JSON)")->required();
  bayes->add_option("--target", bo.target, "Target station (default: config target)");
  bayes->add_option("--chains", bo.mcmc.chains, "Number of chains");
  bayes->add_option("--iters", bo.mcmc.iterations, "Iterations per chain, burn-in included");
  bayes->add_option("--burn-in", bo.mcmc.burn_in, "Burn-in iterations per chain");
  bayes->add_option("--thin", bo.mcmc.thin, "Keep every n-th draw");
  bayes->add_option("--threads", bo.mcmc.threads, "Worker threads (0 = one per chain)");
  bayes->add_option("--seed", bo.seed, "Random seed");
  bayes->add_flag("--flat-prior", bo.flat_prior, "Use prior variances d = 1000");
  bayes->add_option("--return-periods", bo.periods, "Return periods in years")->delimiter(',');
  bayes->add_option("--ci", bo.level, "Credible level");
  bayes->add_option("--prior-out", bo.prior_out, "Prior file (JSON)");
  bayes->add_option("--posterior-out", bo.posterior_out, "Posterior draws and summary (JSON)");
  bayes->add_option("--plot-dir", bo.plot_dir, "Directory for plot data (CSV)");
  bayes->add_option("-o,--out", bo.out, "JSON report");

  EvaluateOptions eo;
  std::vector<std::string> models{"mle", "pwu", "pwb", "reg", "bay"};
  std::string anchor = "first";
  auto* evaluate = app.add_subcommand("evaluate", "Truncated-record comparison of all models");
  evaluate->add_option("config", eo.config, "Region config (JSON)")->required();
  evaluate->add_option("--lengths", eo.eval.lengths, "Truncation lengths in years")
      ->delimiter(',');
  evaluate->add_option("--models", models, "Models: mle,pwu,pwb,reg,bay")->delimiter(',');
  evaluate->add_option("--anchor", anchor, "Keep the first or last m years")
      ->check(CLI::IsMember({"first", "last"}, CLI::ignore_case));
  evaluate->add_flag("--sliding", eo.eval.sliding, "Use every window of m years");
  evaluate->add_option("--return-periods", eo.eval.periods, "Return periods in years")
      ->delimiter(',');
  evaluate->add_option("--replicates", eo.eval.replicates, "Repetitions with fresh MCMC seeds");
  evaluate->add_option("--seed", eo.eval.seed, "Random seed");
  evaluate->add_option("--iters", eo.eval.mcmc.iterations, "MCMC iterations per chain");
  evaluate->add_option("--burn-in", eo.eval.mcmc.burn_in, "MCMC burn-in per chain");
  evaluate->add_option("--chains", eo.eval.mcmc.chains, "MCMC chains");
  evaluate->add_flag("--truth", eo.use_truth, "Score against the config's ground truth");
  evaluate->add_option("-o,--out", eo.out, "JSON report");

  SimulateOptions so;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic region");
  simulate->add_option("--sites", so.spec.sites, "Number of sites");
  simulate->add_option("--years", so.spec.years, "Record length in years");
  simulate->add_option("--rate", so.spec.rate, "Events per year");
  simulate->add_option("--lcv-dispersion", so.spec.lcv_dispersion,
                       "Ratio of largest to smallest site L-CV (<= 1: homogeneous)");
  simulate->add_option("--log-sd", so.spec.log_sd, "Spread of log index floods about the area law");
  simulate->add_option("--start-year", so.spec.start_year, "First year of record");
  simulate->add_option("--seed", so.spec.seed, "Random seed");
  simulate->add_option("-o,--out", so.out_dir, "Output directory")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const std::string started = now_utc();
  json result;
  json resolved;
  try {
    if (*extract) {
      result = cmd_extract(ex, out);
    } else if (*fit) {
      fo.method = parse_fit_method(method);
      result = cmd_fit(fo, out);
    } else if (*region) {
      result = cmd_region(ro, out);
      resolved = {{"seed", ro.seed}, {"nsim", ro.nsim}};
    } else if (*bayes) {
      result = cmd_bayes(bo, out);
      resolved = {{"seed", bo.seed}};
    } else if (*evaluate) {
      eo.eval.models.clear();
      for (const auto& m : models) eo.eval.models.push_back(parse_model(m));
      eo.eval.anchor = parse_anchor(anchor);
      result = cmd_evaluate(eo, out);
      resolved = {{"seed", eo.eval.seed}};
    } else if (*simulate) {
      result = cmd_simulate(so, out);
      resolved = {{"seed", so.spec.seed}};
    }
    if (!report_path.empty()) {
      json report = {{"schema_version", kSchemaVersion},
                     {"kind", "run_report"},
                     {"command", app.get_subcommands().front()->get_name()},
                     {"arguments", args},
                     {"software_version", REGFLOOD_VERSION},
                     {"started_at", started},
                     {"finished_at", now_utc()},
                     {"resolved", resolved},
                     {"result", result}};
      write_json(report_path, report);
    }
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code(e);
    const char* kind = code == 3 ? "contract violation: " : code == 2 ? "numerical failure: " : "";
    err << "error: " << kind << e.what() << "\n";
    return code;
  }
}

}  // namespace regflood::cli
