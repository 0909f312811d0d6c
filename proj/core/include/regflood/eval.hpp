#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regflood/bayes.hpp"
#include "regflood/fit.hpp"
#include "regflood/pot.hpp"
#include "regflood/regional.hpp"

namespace regflood {

enum class Anchor { First, Last };

std::string to_string(Anchor anchor);
Anchor parse_anchor(std::string_view text);

/// The sub-series covering `m` calendar years from the chosen end of the
/// record. Throws InputError when m exceeds the number of calendar years.
DischargeSeries truncate_record(const DischargeSeries& series, int m, Anchor anchor);

/// Calendar years spanned by a POT record (first to last year inclusive).
int span_years(const PotSeries& pot);

/// Events of the calendar years [first_year, last_year]; the record length is
/// scaled by the covered fraction of the original span.
PotSeries pot_window(const PotSeries& pot, int first_year, int last_year);

/// pot_window over `m` calendar years from the chosen end.
PotSeries truncate_pot(const PotSeries& pot, int m, Anchor anchor);

struct BenchmarkEntry {
  double period = 0.0;
  ConfidenceInterval ci;  ///< MLE value with its profile interval
  bool reliable = true;   ///< period <= reliability_factor * record years
};

struct Benchmark {
  GpParams params;
  double rate = 0.0;
  double record_years = 0.0;
  std::vector<BenchmarkEntry> entries;
};

/// Full-record fixed-location MLE with profile intervals per period.
Benchmark benchmark(const PotSeries& full, std::span<const double> periods, double level = 0.90,
                    double reliability_factor = 0.6);
/// Extracts the POT series at `target_rate` first.
Benchmark benchmark(const DischargeSeries& series, double target_rate,
                    std::span<const double> periods, const IndependenceRule& rule = {},
                    double level = 0.90, double reliability_factor = 0.6);

struct BiasError {
  double nbias = 0.0;
  double nrmse = 0.0;
};

/// NBIAS = mean (Q_i - Q) / Q, NRMSE = sqrt(mean ((Q_i - Q) / Q)^2).
BiasError nbias_nrmse(std::span<const double> estimates, double truth);
/// Same with a benchmark per estimate.
BiasError nbias_nrmse(std::span<const double> estimates, std::span<const double> truths);

struct RankScores {
  std::vector<double> raw;           ///< R_o
  std::vector<double> standardized;  ///< R_s, NaN for a model without values
};

/// Standardized rank scores. `table[model][criterion]`; every criterion is
/// ranked ascending on the absolute value (so signed biases rank by
/// magnitude), ties share the average rank. Non-finite cells drop that model
/// from that criterion only, and R_s = (sum p_c - R_o) / (sum p_c - q_m)
/// over the criteria where the model has a value.
RankScores rank_scores(const std::vector<std::vector<double>>& table);

enum class Model { MLE, PWU, PWB, REG, BAY };

std::string to_string(Model model);
Model parse_model(std::string_view text);

struct EvalConfig {
  std::vector<int> lengths{5, 10, 15, 20, 25, 30};
  Anchor anchor = Anchor::First;
  /// Every window of m consecutive years instead of one anchored window.
  bool sliding = false;
  std::vector<double> periods{5.0, 10.0, 20.0};
  std::vector<Model> models{Model::MLE, Model::PWU, Model::PWB, Model::REG, Model::BAY};
  int replicates = 1;
  std::uint64_t seed = 1;
  double level = 0.90;
  RescaleMode rescale = RescaleMode::OneYearQuantile;
  IndexFloodMethod index_flood_method = IndexFloodMethod::GpFit;
  ElicitOptions elicit;
  McmcConfig mcmc{4, 6000, 2000, 1, {0.1, 0.1, 0.1}, true, 1};
};

struct CellStats {
  double nbias = 0.0;
  double nrmse = 0.0;
  int k = 0;  ///< estimates behind the cell; 0 means missing
};

struct ModelRow {
  Model model = Model::MLE;
  std::vector<CellStats> cells;  ///< one per period
  double rank_raw = 0.0;
  double rank_score = 0.0;
  int failures = 0;
};

struct LengthReport {
  int m = 0;
  std::vector<ModelRow> rows;
};

struct EvalReport {
  std::string target;
  std::vector<double> periods;
  std::vector<LengthReport> lengths;
  std::vector<BenchmarkEntry> benchmark;  ///< empty for synthetic runs
  std::vector<std::string> failures;      ///< one line per failed cell
  int replicates = 1;
  std::uint64_t seed = 0;
};

/// Fits every model on truncated target records and scores them against the
/// full-record MLE benchmark, or against `truth` quantiles (one per period)
/// when given. Regional and Bayesian models see the full non-target records.
EvalReport run_experiment(const EvalConfig& config, const Region& region,
                          const std::optional<std::vector<double>>& truth = std::nullopt);

/// Point estimates of one model on one truncated target record, one per
/// period. `prior` is required for BAY.
std::vector<double> model_estimates(Model model, const Region& region, const PotSeries& truncated,
                                    std::span<const double> periods, const EvalConfig& config,
                                    const PriorSpec* prior, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic regions.

struct SynthSpec {
  int sites = 14;
  int years = 32;
  /// Record length per site; empty means `years` for every site.
  std::vector<int> site_years;
  /// Dimensionless growth curve, equal to 1 at p = 0.5 by default.
  GpParams growth{0.6, 0.557305, 0.1};
  double rate = 2.0;  ///< events per year
  /// Poisson event counts; false gives every site round(rate * years).
  bool poisson_counts = true;
  double a = 0.12;
  double b = 1.01;
  double log_sd = 0.25;  ///< sd of log index-flood residuals
  std::vector<double> areas;  ///< km2; empty uses the 14 built-in areas
  /// Ratio between the largest and smallest site L-CV; <= 1 means none.
  double lcv_dispersion = 0.0;
  int start_year = 1970;
  int target = 0;  ///< index of the target site
  std::uint64_t seed = 1;
};

struct SiteTruth {
  std::string code;
  double index_flood = 0.0;
  GpParams params;  ///< m3/s
  double rate = 0.0;
};

struct SyntheticRegion {
  Region region;
  std::vector<SiteTruth> truth;
};

/// 14 built-in drainage areas (km2) used when SynthSpec::areas is empty.
std::span<const double> default_areas();

/// Region whose sites follow gp_rescale(growth_i, c_i) with
/// c_i = a A_i^b exp(eps_i); growth_i has L-CV t_R d^(i/(N-1) - 1/2) for a
/// dispersion factor d and equals 1 at p = 0.5. A Poisson number of events
/// falls on days at least 12 apart; thresholds equal the site locations.
SyntheticRegion synth_region(const SynthSpec& spec);

/// run_experiment over `config.replicates` synthetic regions; replicate r
/// uses spec.seed = derive_seed(config.seed, r). With `truth_benchmark` the
/// true target quantiles replace the full-record MLE benchmark.
EvalReport run_synthetic_experiment(const EvalConfig& config, const SynthSpec& spec,
                                    bool truth_benchmark = false);

}  // namespace regflood
