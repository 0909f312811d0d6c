#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "regflood/calendar.hpp"
#include "regflood/error.hpp"
#include "regflood/eval.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DischargeSeries daily_1969_2003() {
  DischargeSeries s;
  s.code = "T";
  for (Timestamp t = start_of_year(1969); t < start_of_year(2004); t += 86400) {
    s.time.push_back(t);
    s.discharge.push_back(1.0);
  }
  return s;
}

TEST(NbiasNrmse, Examples) {
  const std::vector<double> exact{5.0, 5.0};
  auto e = nbias_nrmse(exact, 5.0);
  EXPECT_EQ(e.nbias, 0.0);
  EXPECT_EQ(e.nrmse, 0.0);
  const std::vector<double> pair{1.1, 0.9};
  e = nbias_nrmse(pair, 1.0);
  EXPECT_NEAR(e.nbias, 0.0, 1e-15);
  EXPECT_NEAR(e.nrmse, 0.1, 1e-15);
  const std::vector<double> one{1.2};
  e = nbias_nrmse(one, 1.0);
  EXPECT_NEAR(e.nbias, 0.2, 1e-15);
  EXPECT_NEAR(e.nrmse, 0.2, 1e-15);
  EXPECT_THROW(nbias_nrmse(one, 0.0), InputError);
  EXPECT_THROW(nbias_nrmse(std::vector<double>{}, 1.0), InsufficientData);
}

TEST(NbiasNrmse, RmseBoundsBias) {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(1 + rng.index(20));
    for (double& v : x) v = 10.0 * rng.uniform();
    const auto e = nbias_nrmse(x, 1.0 + rng.uniform());
    EXPECT_GE(e.nrmse + 1e-15, std::abs(e.nbias));
  }
}

TEST(RankScores, Endpoints) {
  const std::vector<std::vector<double>> t{{0.1, 0.1, 0.1}, {0.2, 0.3, 0.2}, {0.5, 0.9, 0.7}};
  const RankScores r = rank_scores(t);
  EXPECT_EQ(r.raw, (std::vector<double>{3, 6, 9}));
  EXPECT_DOUBLE_EQ(r.standardized[0], 1.0);
  EXPECT_DOUBLE_EQ(r.standardized[1], 0.5);
  EXPECT_DOUBLE_EQ(r.standardized[2], 0.0);
  for (double s : r.standardized) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(RankScores, SignedBiasRanksByMagnitude) {
  const std::vector<std::vector<double>> t{{-0.05}, {0.2}, {-0.3}};
  EXPECT_EQ(rank_scores(t).raw, (std::vector<double>{1, 2, 3}));
}

TEST(RankScores, TiesShareAverageRank) {
  const std::vector<std::vector<double>> t{{0.1, 0.2}, {0.1, 0.3}, {0.3, 0.2}};
  const RankScores r = rank_scores(t);
  EXPECT_EQ(r.raw, (std::vector<double>{3.0, 4.5, 4.5}));
  EXPECT_DOUBLE_EQ(r.standardized[0], 0.75);
  EXPECT_DOUBLE_EQ(r.standardized[1], 0.375);
  EXPECT_DOUBLE_EQ(r.standardized[2], 0.375);
}

TEST(RankScores, InvariantUnderMonotoneTransform) {
  Rng rng(4);
  std::vector<std::vector<double>> t(5, std::vector<double>(6));
  for (auto& row : t) {
    for (double& v : row) v = rng.uniform();
  }
  auto u = t;
  for (auto& row : u) {
    for (double& v : row) v = std::exp(3.0 * v) - 0.5;
  }
  // exp(3v) - 0.5 > 0 keeps magnitudes in the same order.
  const RankScores a = rank_scores(t), b = rank_scores(u);
  EXPECT_EQ(a.raw, b.raw);
  EXPECT_EQ(a.standardized, b.standardized);
}

TEST(RankScores, NonFiniteCellsDropPerCriterion) {
  const std::vector<std::vector<double>> t{{0.1, kNaN}, {0.2, 0.1}, {0.3, 0.2}, {kNaN, kNaN}};
  const RankScores r = rank_scores(t);
  EXPECT_DOUBLE_EQ(r.raw[0], 1.0);
  EXPECT_DOUBLE_EQ(r.raw[1], 3.0);
  EXPECT_DOUBLE_EQ(r.raw[2], 5.0);
  EXPECT_DOUBLE_EQ(r.standardized[0], 1.0);
  EXPECT_DOUBLE_EQ(r.standardized[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.standardized[2], 0.0);
  EXPECT_TRUE(std::isnan(r.standardized[3]));
  EXPECT_THROW(rank_scores({{0.1}}), InputError);
  EXPECT_THROW(rank_scores({{0.1, 0.2}, {0.3}}), InputError);
}

TEST(Truncation, AnchoredWindows) {
  const DischargeSeries s = daily_1969_2003();
  DischargeSeries a = truncate_record(s, 5, Anchor::First);
  EXPECT_EQ(year_of(a.time.front()), 1969);
  EXPECT_EQ(year_of(a.time.back()), 1973);
  a = truncate_record(s, 15, Anchor::Last);
  EXPECT_EQ(year_of(a.time.front()), 1989);
  EXPECT_EQ(year_of(a.time.back()), 2003);
  a = truncate_record(s, 35, Anchor::First);
  EXPECT_EQ(a.time, s.time);
  EXPECT_EQ(a.discharge, s.discharge);
  EXPECT_THROW(truncate_record(s, 36, Anchor::First), InputError);
  EXPECT_THROW(truncate_record(s, 0, Anchor::Last), InputError);
}

TEST(Truncation, PotWindows) {
  PotSeries p;
  p.code = "T";
  p.threshold = 1.0;
  p.record_start = start_of_year(1969);
  p.record_end = start_of_year(2004) - 1;
  p.record_years = 35.0;
  for (int y = 1969; y <= 2003; ++y) {
    p.peaks.push_back(2.0 + (y - 1969));
    p.times.push_back(start_of_year(y) + 100 * 86400);
  }
  EXPECT_EQ(span_years(p), 35);
  const PotSeries a = truncate_pot(p, 5, Anchor::First);
  EXPECT_EQ(a.peaks, (std::vector<double>{2, 3, 4, 5, 6}));
  EXPECT_NEAR(a.record_years, 5.0, 1e-12);
  const PotSeries b = truncate_pot(p, 15, Anchor::Last);
  EXPECT_EQ(b.peaks.front(), 22.0);
  EXPECT_EQ(b.peaks.size(), 15u);
  EXPECT_EQ(year_of(b.record_start), 1989);
  const PotSeries c = truncate_pot(p, 35, Anchor::Last);
  EXPECT_EQ(c.peaks, p.peaks);
  EXPECT_EQ(c.record_years, p.record_years);
  EXPECT_THROW(truncate_pot(p, 40, Anchor::First), InputError);
}

TEST(Names, ModelsAndAnchors) {
  for (Model m : {Model::MLE, Model::PWU, Model::PWB, Model::REG, Model::BAY}) {
    EXPECT_EQ(parse_model(to_string(m)), m);
  }
  EXPECT_EQ(parse_model("BAY"), Model::BAY);
  EXPECT_THROW(parse_model("lmom"), InputError);
  EXPECT_EQ(parse_anchor("last"), Anchor::Last);
  EXPECT_EQ(to_string(Anchor::First), "first");
  EXPECT_THROW(parse_anchor("middle"), InputError);
}

TEST(Benchmark, IntervalsContainEstimates) {
  SynthSpec spec;
  spec.seed = 5;
  const SyntheticRegion syn = synth_region(spec);
  const std::vector<double> periods{5, 10, 20, 50};
  const Benchmark b = benchmark(syn.region.sites[0].pot, periods);
  ASSERT_EQ(b.entries.size(), periods.size());
  double last = 0.0;
  for (const auto& e : b.entries) {
    EXPECT_LE(e.ci.lower, e.ci.estimate);
    EXPECT_GE(e.ci.upper, e.ci.estimate);
    EXPECT_GT(e.ci.estimate, last);
    last = e.ci.estimate;
    EXPECT_EQ(e.reliable, e.period <= 0.6 * b.record_years);
  }
  EXPECT_FALSE(b.entries.back().reliable);
}

TEST(Synthetic, ReproducibleRegion) {
  SynthSpec spec;
  spec.seed = 77;
  const SyntheticRegion a = synth_region(spec), b = synth_region(spec);
  ASSERT_EQ(a.region.sites.size(), 14u);
  for (std::size_t i = 0; i < a.region.sites.size(); ++i) {
    EXPECT_EQ(a.region.sites[i].pot.peaks, b.region.sites[i].pot.peaks);
    EXPECT_EQ(a.region.sites[i].pot.times, b.region.sites[i].pot.times);
    EXPECT_EQ(a.truth[i].params.scale, b.truth[i].params.scale);
  }
  spec.seed = 78;
  EXPECT_NE(synth_region(spec).region.sites[0].pot.peaks, a.region.sites[0].pot.peaks);
}

TEST(Synthetic, GrowthCurveAtMedianAndSpacing) {
  SynthSpec spec;
  spec.seed = 9;
  const SyntheticRegion syn = synth_region(spec);
  // The default growth curve is rounded to six digits.
  EXPECT_NEAR(gp_quantile(spec.growth, 0.5), 1.0, 1e-5);
  for (std::size_t i = 0; i < syn.truth.size(); ++i) {
    const auto& t = syn.truth[i];
    EXPECT_NEAR(gp_quantile(t.params, 0.5), t.index_flood * gp_quantile(spec.growth, 0.5),
                1e-12 * t.index_flood);
    const auto& pot = syn.region.sites[i].pot;
    EXPECT_EQ(pot.threshold, t.params.location);
    for (std::size_t k = 1; k < pot.times.size(); ++k) {
      EXPECT_GE(pot.times[k] - pot.times[k - 1], 12 * 86400);
    }
  }
}

TEST(Experiment, ReproducibleSmallRun) {
  SynthSpec spec;
  spec.sites = 8;
  spec.years = 20;
  spec.seed = 3;
  const SyntheticRegion syn = synth_region(spec);
  EvalConfig c;
  c.lengths = {5, 10};
  c.periods = {5, 10};
  c.mcmc = {2, 2000, 500, 1, {0.1, 0.1, 0.1}, true, 1};
  const EvalReport a = run_experiment(c, syn.region);
  const EvalReport b = run_experiment(c, syn.region);
  ASSERT_EQ(a.lengths.size(), 2u);
  for (std::size_t l = 0; l < a.lengths.size(); ++l) {
    ASSERT_EQ(a.lengths[l].rows.size(), 5u);
    for (std::size_t m = 0; m < 5; ++m) {
      const auto& ra = a.lengths[l].rows[m];
      const auto& rb = b.lengths[l].rows[m];
      EXPECT_EQ(ra.rank_raw, rb.rank_raw);
      for (std::size_t t = 0; t < ra.cells.size(); ++t) {
        EXPECT_EQ(ra.cells[t].nbias, rb.cells[t].nbias);
        EXPECT_EQ(ra.cells[t].nrmse, rb.cells[t].nrmse);
      }
    }
  }
  EXPECT_EQ(a.failures, b.failures);
  c.lengths = {21};
  EXPECT_THROW(run_experiment(c, syn.region), InputError);
}

TEST(Experiment, FullLengthMleMatchesBenchmark) {
  SynthSpec spec;
  spec.sites = 6;
  spec.years = 25;
  spec.seed = 12;
  const SyntheticRegion syn = synth_region(spec);
  EvalConfig c;
  c.lengths = {25};
  c.periods = {5, 10};
  c.models = {Model::MLE, Model::PWU};
  const EvalReport r = run_experiment(c, syn.region);
  for (const auto& cell : r.lengths[0].rows[0].cells) {
    EXPECT_EQ(cell.k, 1);
    EXPECT_NEAR(cell.nbias, 0.0, 1e-12);
  }
}

}  // namespace
}  // namespace regflood
