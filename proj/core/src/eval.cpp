#include "regflood/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "regflood/error.hpp"
#include "regflood/log.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view text) {
  std::string out(text);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

std::string to_string(Anchor anchor) { return anchor == Anchor::First ? "first" : "last"; }

Anchor parse_anchor(std::string_view text) {
  const std::string t = lower(text);
  if (t == "first") return Anchor::First;
  if (t == "last") return Anchor::Last;
  throw InputError("unknown anchor '" + std::string(text) + "' (expected first or last)");
}

DischargeSeries truncate_record(const DischargeSeries& series, int m, Anchor anchor) {
  validate(series);
  const int y0 = year_of(series.time.front());
  const int y1 = year_of(series.time.back());
  const int span = y1 - y0 + 1;
  if (m < 1 || m > span) {
    throw InputError("truncation length m = " + std::to_string(m) + " outside the record span of " +
                     std::to_string(span) + " years");
  }
  const int first = anchor == Anchor::First ? y0 : y1 - m + 1;
  const int last = first + m - 1;
  DischargeSeries out;
  out.code = series.code;
  for (std::size_t i = 0; i < series.time.size(); ++i) {
    const int y = year_of(series.time[i]);
    if (y >= first && y <= last) {
      out.time.push_back(series.time[i]);
      out.discharge.push_back(series.discharge[i]);
    }
  }
  return out;
}

int span_years(const PotSeries& pot) {
  return year_of(pot.record_end) - year_of(pot.record_start) + 1;
}

PotSeries pot_window(const PotSeries& pot, int first_year, int last_year) {
  const int y0 = year_of(pot.record_start);
  const int y1 = year_of(pot.record_end);
  const int lo = std::max(first_year, y0);
  const int hi = std::min(last_year, y1);
  if (hi < lo) throw InputError("POT window outside the record of '" + pot.code + "'");
  PotSeries out;
  out.code = pot.code;
  out.threshold = pot.threshold;
  out.record_years = pot.record_years * (hi - lo + 1) / static_cast<double>(y1 - y0 + 1);
  out.record_start = std::max(pot.record_start, start_of_year(lo));
  out.record_end = std::min(pot.record_end, start_of_year(hi + 1) - 1);
  for (std::size_t i = 0; i < pot.peaks.size(); ++i) {
    const int y = year_of(pot.times[i]);
    if (y >= lo && y <= hi) {
      out.peaks.push_back(pot.peaks[i]);
      out.times.push_back(pot.times[i]);
    }
  }
  return out;
}

PotSeries truncate_pot(const PotSeries& pot, int m, Anchor anchor) {
  const int span = span_years(pot);
  if (m < 1 || m > span) {
    throw InputError("truncation length m = " + std::to_string(m) + " outside the record span of " +
                     std::to_string(span) + " years");
  }
  const int y0 = year_of(pot.record_start);
  const int y1 = year_of(pot.record_end);
  const int first = anchor == Anchor::First ? y0 : y1 - m + 1;
  return pot_window(pot, first, first + m - 1);
}

Benchmark benchmark(const PotSeries& full, std::span<const double> periods, double level,
                    double reliability_factor) {
  Benchmark out;
  out.rate = full.rate();
  out.record_years = full.record_years;
  out.params = gp_fit_mle(full, LocationMode::Fixed).params;
  for (double period : periods) {
    BenchmarkEntry e;
    e.period = period;
    e.ci = profile_ci(full, out.rate, period, level);
    e.reliable = period <= reliability_factor * full.record_years;
    out.entries.push_back(e);
  }
  return out;
}

Benchmark benchmark(const DischargeSeries& series, double target_rate,
                    std::span<const double> periods, const IndependenceRule& rule, double level,
                    double reliability_factor) {
  const ThresholdChoice choice = select_threshold(series, target_rate, rule);
  return benchmark(extract_pot(series, choice.threshold, rule), periods, level,
                   reliability_factor);
}

BiasError nbias_nrmse(std::span<const double> estimates, double truth) {
  std::vector<double> truths(estimates.size(), truth);
  return nbias_nrmse(estimates, truths);
}

BiasError nbias_nrmse(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.empty()) throw InsufficientData("NBIAS/NRMSE need at least one estimate");
  if (estimates.size() != truths.size()) {
    throw InputError("NBIAS/NRMSE: estimate and benchmark counts differ");
  }
  double bias = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (truths[i] == 0.0 || !std::isfinite(truths[i])) {
      throw InputError("NBIAS/NRMSE: benchmark value must be finite and non-zero");
    }
    const double r = (estimates[i] - truths[i]) / truths[i];
    bias += r;
    sq += r * r;
  }
  const double k = static_cast<double>(estimates.size());
  return {bias / k, std::sqrt(sq / k)};
}

RankScores rank_scores(const std::vector<std::vector<double>>& table) {
  const std::size_t p = table.size();
  if (p < 2) throw InputError("rank scores need at least 2 models");
  const std::size_t q = table.front().size();
  if (q < 1) throw InputError("rank scores need at least 1 criterion");
  for (const auto& row : table) {
    if (row.size() != q) throw InputError("rank scores: ragged index table");
  }
  RankScores out;
  out.raw.assign(p, 0.0);
  std::vector<double> max_sum(p, 0.0);
  std::vector<int> counted(p, 0);
  for (std::size_t c = 0; c < q; ++c) {
    std::vector<std::size_t> present;
    for (std::size_t m = 0; m < p; ++m) {
      if (std::isfinite(table[m][c])) {
        present.push_back(m);
      } else {
        log::warn("rank scores: model " + std::to_string(m) + " has no value for criterion " +
                  std::to_string(c) + "; excluded from it");
      }
    }
    std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(table[a][c]) < std::abs(table[b][c]);
    });
    for (std::size_t i = 0; i < present.size();) {
      std::size_t j = i + 1;
      while (j < present.size() &&
             std::abs(table[present[j]][c]) == std::abs(table[present[i]][c])) {
        ++j;
      }
      const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
      for (std::size_t t = i; t < j; ++t) {
        out.raw[present[t]] += rank;
        max_sum[present[t]] += static_cast<double>(present.size());
        ++counted[present[t]];
      }
      i = j;
    }
  }
  out.standardized.resize(p);
  for (std::size_t m = 0; m < p; ++m) {
    const double denom = max_sum[m] - counted[m];
    out.standardized[m] = (counted[m] > 0 && denom > 0.0) ? (max_sum[m] - out.raw[m]) / denom : kNaN;
  }
  return out;
}

std::string to_string(Model model) {
  switch (model) {
    case Model::MLE: return "MLE";
    case Model::PWU: return "PWU";
    case Model::PWB: return "PWB";
    case Model::REG: return "REG";
    case Model::BAY: return "BAY";
  }
  return "?";
}

Model parse_model(std::string_view text) {
  const std::string t = lower(text);
  if (t == "mle") return Model::MLE;
  if (t == "pwu") return Model::PWU;
  if (t == "pwb") return Model::PWB;
  if (t == "reg") return Model::REG;
  if (t == "bay") return Model::BAY;
  throw InputError("unknown model '" + std::string(text) +
                   "' (expected mle, pwu, pwb, reg or bay)");
}

std::vector<double> model_estimates(Model model, const Region& region, const PotSeries& truncated,
                                    std::span<const double> periods, const EvalConfig& config,
                                    const PriorSpec* prior, std::uint64_t seed) {
  if (truncated.peaks.empty()) throw EmptySeries("no exceedance in the truncated record");
  const double lambda = truncated.rate();
  std::vector<double> out;
  switch (model) {
    case Model::MLE:
    case Model::PWU:
    case Model::PWB: {
      const FitMethod method = model == Model::MLE   ? FitMethod::MLE
                               : model == Model::PWU ? FitMethod::PWU
                                                     : FitMethod::PWB;
      const GpParams params = gp_fit(truncated, method).params;
      for (double t : periods) out.push_back(return_level(params, lambda, t));
      return out;
    }
    case Model::REG: {
      Region trimmed = region;
      trimmed.sites[region.index_of(region.target)].pot = truncated;
      const GrowthCurve curve =
          growth_curve(trimmed, {}, config.rescale, config.index_flood_method);
      double c = 0.0;
      if (config.rescale == RescaleMode::OneYearQuantile) {
        c = at_site_index_flood(truncated, config.index_flood_method).c;
      } else {
        c = std::accumulate(truncated.peaks.begin(), truncated.peaks.end(), 0.0) /
            static_cast<double>(truncated.peaks.size());
      }
      for (double t : periods) {
        out.push_back(index_flood_quantile(curve, c, return_probability(lambda, t)));
      }
      return out;
    }
    case Model::BAY: {
      if (!prior) throw InputError("BAY model needs an elicited prior");
      const PosteriorChains chains = mcmc_sample(*prior, truncated.peaks, config.mcmc, seed);
      for (const auto& q : posterior_quantiles(chains, lambda, periods, config.level)) {
        out.push_back(q.point);
      }
      return out;
    }
  }
  throw InputError("unknown model");
}

namespace {

// estimates[length][model][period] with matching benchmark values.
struct Accumulator {
  std::vector<std::vector<std::vector<std::vector<double>>>> est, ref;
  std::vector<std::vector<int>> failures;

  Accumulator(std::size_t lengths, std::size_t models, std::size_t periods)
      : est(lengths, std::vector<std::vector<std::vector<double>>>(
                         models, std::vector<std::vector<double>>(periods))),
        ref(est),
        failures(lengths, std::vector<int>(models, 0)) {}
};

void check_config(const EvalConfig& config) {
  if (config.lengths.empty()) throw InputError("evaluation needs at least one length");
  if (config.periods.empty()) throw InputError("evaluation needs at least one return period");
  if (config.models.size() < 2) throw InputError("evaluation needs at least two models");
  if (config.replicates < 1) throw InputError("replicates must be at least 1");
}

void accumulate(const EvalConfig& config, const Region& region,
                const std::vector<double>& reference, std::uint64_t seed, Accumulator& acc,
                std::vector<std::string>& failures) {
  const PotSeries& full = region.site(region.target).pot;
  const int span = span_years(full);

  std::optional<PriorSpec> prior;
  std::string prior_error;
  if (std::find(config.models.begin(), config.models.end(), Model::BAY) != config.models.end()) {
    try {
      prior = elicit_prior(region, region.target, config.elicit);
    } catch (const ContractViolation&) {
      throw;
    } catch (const Error& e) {
      prior_error = e.what();
    }
  }

  const int y0 = year_of(full.record_start);
  for (std::size_t li = 0; li < config.lengths.size(); ++li) {
    const int m = config.lengths[li];
    if (m < 1 || m > span) {
      throw InputError("truncation length " + std::to_string(m) +
                       " exceeds the target record of " + std::to_string(span) + " years");
    }
    std::vector<int> starts;
    if (config.sliding) {
      for (int s = y0; s + m - 1 <= y0 + span - 1; ++s) starts.push_back(s);
    } else {
      starts.push_back(config.anchor == Anchor::First ? y0 : y0 + span - m);
    }
    for (std::size_t w = 0; w < starts.size(); ++w) {
      const PotSeries truncated = pot_window(full, starts[w], starts[w] + m - 1);
      const std::uint64_t cell_seed = derive_seed(derive_seed(seed, li), w);
      for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
        const Model model = config.models[mi];
        try {
          if (model == Model::BAY && !prior) throw NumericalError("prior: " + prior_error);
          const auto q = model_estimates(model, region, truncated, config.periods, config,
                                         prior ? &*prior : nullptr, cell_seed);
          for (std::size_t t = 0; t < q.size(); ++t) {
            if (!std::isfinite(q[t])) throw NumericalError("non-finite estimate");
          }
          for (std::size_t t = 0; t < q.size(); ++t) {
            acc.est[li][mi][t].push_back(q[t]);
            acc.ref[li][mi][t].push_back(reference[t]);
          }
        } catch (const ContractViolation&) {
          throw;
        } catch (const Error& e) {
          ++acc.failures[li][mi];
          failures.push_back("m=" + std::to_string(m) + " window " + std::to_string(starts[w]) +
                             " " + to_string(model) + ": " + e.what());
        }
      }
    }
  }
}

void finalize(const EvalConfig& config, const Accumulator& acc, EvalReport& report) {
  const std::size_t np = config.periods.size();
  for (std::size_t li = 0; li < config.lengths.size(); ++li) {
    LengthReport lr;
    lr.m = config.lengths[li];
    std::vector<std::vector<double>> table;
    for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
      ModelRow row;
      row.model = config.models[mi];
      row.failures = acc.failures[li][mi];
      std::vector<double> nrmse(np, kNaN), nbias(np, kNaN);
      for (std::size_t t = 0; t < np; ++t) {
        CellStats cell;
        const auto& est = acc.est[li][mi][t];
        cell.k = static_cast<int>(est.size());
        if (cell.k > 0) {
          const BiasError be = nbias_nrmse(est, acc.ref[li][mi][t]);
          cell.nbias = be.nbias;
          cell.nrmse = be.nrmse;
          nrmse[t] = be.nrmse;
          nbias[t] = be.nbias;
        } else {
          cell.nbias = cell.nrmse = kNaN;
        }
        row.cells.push_back(cell);
      }
      std::vector<double> criteria = nrmse;
      criteria.insert(criteria.end(), nbias.begin(), nbias.end());
      table.push_back(std::move(criteria));
      lr.rows.push_back(std::move(row));
    }
    const RankScores rs = rank_scores(table);
    for (std::size_t mi = 0; mi < lr.rows.size(); ++mi) {
      lr.rows[mi].rank_raw = rs.raw[mi];
      lr.rows[mi].rank_score = rs.standardized[mi];
    }
    report.lengths.push_back(std::move(lr));
  }
  if (!report.failures.empty()) {
    log::warn("evaluation: " + std::to_string(report.failures.size()) +
              " model fits failed; their cells are excluded from ranking");
  }
}

}  // namespace

EvalReport run_experiment(const EvalConfig& config, const Region& region,
                          const std::optional<std::vector<double>>& truth) {
  check_config(config);
  validate(region);
  if (region.target.empty()) throw InputError("evaluation needs a target site");
  EvalReport report;
  report.target = region.target;
  report.periods = config.periods;
  report.replicates = config.replicates;
  report.seed = config.seed;

  std::vector<double> reference;
  if (truth) {
    if (truth->size() != config.periods.size()) {
      throw InputError("one true quantile per return period is required");
    }
    reference = *truth;
  } else {
    const Benchmark bench = benchmark(region.site(region.target).pot, config.periods, config.level);
    report.benchmark = bench.entries;
    for (const auto& e : bench.entries) reference.push_back(e.ci.estimate);
  }

  Accumulator acc(config.lengths.size(), config.models.size(), config.periods.size());
  for (int r = 0; r < config.replicates; ++r) {
    accumulate(config, region, reference, derive_seed(config.seed, static_cast<std::uint64_t>(r)),
               acc, report.failures);
  }
  finalize(config, acc, report);
  return report;
}

EvalReport run_synthetic_experiment(const EvalConfig& config, const SynthSpec& spec,
                                    bool truth_benchmark) {
  check_config(config);
  EvalReport report;
  report.periods = config.periods;
  report.replicates = config.replicates;
  report.seed = config.seed;
  Accumulator acc(config.lengths.size(), config.models.size(), config.periods.size());
  for (int r = 0; r < config.replicates; ++r) {
    SynthSpec rs = spec;
    rs.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    const SyntheticRegion syn = synth_region(rs);
    report.target = syn.region.target;
    std::vector<double> reference;
    const auto& truth = syn.truth[static_cast<std::size_t>(spec.target)];
    try {
      if (truth_benchmark) {
        for (double t : config.periods) {
          reference.push_back(return_level(truth.params, truth.rate, t));
        }
      } else {
        const Benchmark bench =
            benchmark(syn.region.site(syn.region.target).pot, config.periods, config.level);
        for (const auto& e : bench.entries) reference.push_back(e.ci.estimate);
      }
    } catch (const ContractViolation&) {
      throw;
    } catch (const Error& e) {
      report.failures.push_back("replicate " + std::to_string(r) + " benchmark: " + e.what());
      continue;
    }
    accumulate(config, syn.region, reference, derive_seed(rs.seed, 0x5eedULL), acc,
               report.failures);
  }
  finalize(config, acc, report);
  return report;
}

}  // namespace regflood
