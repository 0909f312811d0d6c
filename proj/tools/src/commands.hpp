#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "io.hpp"

namespace regflood::cli {

struct ExtractOptions {
  fs::path series;
  std::string code;  ///< defaults to the file stem
  std::optional<double> threshold;
  std::optional<double> target_rate;
  IndependenceRule rule;
  fs::path out;
};

struct FitOptions {
  fs::path pot;
  FitMethod method = FitMethod::MLE;
  std::vector<double> periods{2.0, 5.0, 10.0, 20.0};
  double level = 0.90;
  std::optional<fs::path> out;
};

struct RegionOptions {
  fs::path config;
  bool check = false;
  bool growth = false;
  int nsim = 500;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::optional<fs::path> out;
  std::optional<fs::path> curve_out;
};

struct BayesOptions {
  fs::path config;
  std::string target;  ///< defaults to the config target
  McmcConfig mcmc;
  std::uint64_t seed = 1;
  bool flat_prior = false;
  std::vector<double> periods{2.0, 5.0, 10.0, 20.0};
  double level = 0.90;
  std::optional<fs::path> prior_out;
  std::optional<fs::path> posterior_out;
  std::optional<fs::path> plot_dir;
  std::optional<fs::path> out;
};

struct EvaluateOptions {
  fs::path config;
  EvalConfig eval;
  /// Score against the config's ground-truth file instead of the benchmark.
  bool use_truth = false;
  std::optional<fs::path> out;
};

struct SimulateOptions {
  SynthSpec spec;
  fs::path out_dir;
};

/// Every command prints a human summary to `out` and returns the machine
/// result that was written (also used for the run report).
json cmd_extract(const ExtractOptions& o, std::ostream& out);
json cmd_fit(const FitOptions& o, std::ostream& out);
json cmd_region(const RegionOptions& o, std::ostream& out);
json cmd_bayes(const BayesOptions& o, std::ostream& out);
json cmd_evaluate(const EvaluateOptions& o, std::ostream& out);
json cmd_simulate(const SimulateOptions& o, std::ostream& out);

/// Daily discharge series whose independent peaks above `pot.threshold` are
/// exactly the events of `pot`.
DischargeSeries synth_series(const PotSeries& pot, std::uint64_t seed);

/// Exit code of a failure: 1 input, 2 numerical, 3 contract violation.
int exit_code(const std::exception& e);

/// Parses arguments, runs one command and maps failures to exit codes:
/// 0 success, 1 input or usage error, 2 numerical failure, 3 contract
/// violation.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regflood::cli
