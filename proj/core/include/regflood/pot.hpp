#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "regflood/calendar.hpp"

namespace regflood {

/// A station's raw discharge record.
struct DischargeSeries {
  std::string code;
  std::vector<Timestamp> time;    ///< strictly increasing
  std::vector<double> discharge;  ///< m3/s, >= 0
};

/// Throws InputError unless the series is non-empty, times strictly increase
/// and discharges are finite and non-negative.
void validate(const DischargeSeries& series);

/// Declustering rule. Two peaks are independent when they are at least
/// `min_gap_days` apart and the flow between them falls below
/// `trough_fraction` times the smaller peak.
struct IndependenceRule {
  double min_gap_days = 10.0;
  double trough_fraction = 2.0 / 3.0;
  /// Sampling gaps longer than this are treated as missing data and do not
  /// count towards the record length.
  double missing_gap_days = 30.0;
};

/// Declustered exceedances of one station.
struct PotSeries {
  std::string code;
  double threshold = 0.0;
  std::vector<double> peaks;     ///< m3/s, each > threshold
  std::vector<Timestamp> times;  ///< event times, increasing
  double record_years = 0.0;
  Timestamp record_start = 0;
  Timestamp record_end = 0;

  /// Mean number of events per year.
  double rate() const;
};

/// Effective record length in years: span from first to last sample plus one
/// median sampling step, minus gaps longer than `missing_gap_days`.
double record_years(const DischargeSeries& series, double missing_gap_days = 30.0);

/// Indices of the mutually independent peaks of the whole series, in time
/// order. Local maxima are accepted from the largest down, each one only if
/// it is independent of its nearest accepted neighbours on both sides.
/// Extraction at any threshold keeps the members above it, so raising the
/// threshold can only remove events.
std::vector<std::size_t> independent_peaks(const DischargeSeries& series,
                                           const IndependenceRule& rule);

/// Independent peaks strictly above `threshold`. Throws EmptySeries when there
/// are none.
PotSeries extract_pot(const DischargeSeries& series, double threshold,
                      const IndependenceRule& rule = {});

struct ThresholdChoice {
  double threshold = 0.0;
  double rate = 0.0;  ///< achieved events per year
};

/// Largest threshold on a 200-point empirical-quantile grid of the positive
/// discharges whose event rate reaches `target_rate`. Throws SelectionError
/// when no grid threshold does.
ThresholdChoice select_threshold(const DischargeSeries& series, double target_rate,
                                 const IndependenceRule& rule = {});

}  // namespace regflood
