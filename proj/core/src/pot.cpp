#include "regflood/pot.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iterator>
#include <set>
#include <string>

#include "regflood/error.hpp"

namespace regflood {
namespace {

// Range-minimum queries over a fixed array in O(1) after O(n log n) setup.
class RangeMin {
 public:
  explicit RangeMin(const std::vector<double>& x) {
    const std::size_t n = x.size();
    table_.push_back(x);
    for (std::size_t w = 1; 2 * w <= n; w *= 2) {
      const auto& prev = table_.back();
      std::vector<double> next(n - 2 * w + 1);
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] = std::min(prev[i], prev[i + w]);
      }
      table_.push_back(std::move(next));
    }
  }

  // Minimum over the closed range [lo, hi].
  double operator()(std::size_t lo, std::size_t hi) const {
    const std::size_t len = hi - lo + 1;
    const auto level = static_cast<std::size_t>(std::bit_width(len) - 1);
    const std::size_t w = std::size_t{1} << level;
    return std::min(table_[level][lo], table_[level][hi + 1 - w]);
  }

 private:
  std::vector<std::vector<double>> table_;
};

double median_step_seconds(const DischargeSeries& series) {
  if (series.time.size() < 2) return kSecondsPerDay;
  std::vector<double> steps(series.time.size() - 1);
  for (std::size_t i = 1; i < series.time.size(); ++i) {
    steps[i - 1] = static_cast<double>(series.time[i] - series.time[i - 1]);
  }
  const auto mid = steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2);
  std::nth_element(steps.begin(), mid, steps.end());
  return *mid;
}

// Type-7 sample quantile of an ascending vector.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void validate(const DischargeSeries& series) {
  if (series.time.empty()) throw InputError("discharge series '" + series.code + "' is empty");
  if (series.time.size() != series.discharge.size()) {
    throw InputError("discharge series '" + series.code +
                     "': time and discharge lengths differ");
  }
  for (std::size_t i = 0; i < series.time.size(); ++i) {
    if (i > 0 && series.time[i] <= series.time[i - 1]) {
      throw InputError("discharge series '" + series.code +
                       "': timestamps must increase strictly (index " +
                       std::to_string(i) + ")");
    }
    const double q = series.discharge[i];
    if (!std::isfinite(q) || q < 0.0) {
      throw InputError("discharge series '" + series.code +
                       "': discharge must be finite and >= 0 (index " +
                       std::to_string(i) + ")");
    }
  }
}

double PotSeries::rate() const {
  if (!(record_years > 0.0)) throw InputError("POT series has no record length");
  return static_cast<double>(peaks.size()) / record_years;
}

double record_years(const DischargeSeries& series, double missing_gap_days) {
  validate(series);
  const double step = median_step_seconds(series);
  double seconds = static_cast<double>(series.time.back() - series.time.front()) + step;
  const double gap_limit = missing_gap_days * kSecondsPerDay;
  for (std::size_t i = 1; i < series.time.size(); ++i) {
    const double gap = static_cast<double>(series.time[i] - series.time[i - 1]);
    if (gap > gap_limit) seconds -= gap - step;
  }
  return seconds / (kSecondsPerDay * kDaysPerYear);
}

std::vector<std::size_t> independent_peaks(const DischargeSeries& series,
                                           const IndependenceRule& rule) {
  validate(series);
  if (!(rule.min_gap_days >= 0.0) || !(rule.trough_fraction > 0.0) ||
      !(rule.trough_fraction <= 1.0)) {
    throw InputError("independence rule: need min_gap_days >= 0 and 0 < trough_fraction <= 1");
  }
  const auto& x = series.discharge;
  const std::size_t n = x.size();

  // Local maxima; a plateau is represented by its first sample.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && x[j] == x[i]) ++j;
    const bool rises = (i == 0) || x[i - 1] < x[i];
    const bool falls = (j == n) || x[j] < x[i];
    if (rises && falls && x[i] > 0.0) candidates.push_back(i);
    i = j;
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });

  const RangeMin range_min(x);
  const double gap = rule.min_gap_days * kSecondsPerDay;
  auto independent = [&](std::size_t a, std::size_t b) {
    if (static_cast<double>(series.time[b] - series.time[a]) < gap) return false;
    return range_min(a, b) < rule.trough_fraction * std::min(x[a], x[b]);
  };

  std::set<std::size_t> accepted;
  for (std::size_t c : candidates) {
    const auto next = accepted.lower_bound(c);
    if (next != accepted.end() && !independent(c, *next)) continue;
    if (next != accepted.begin() && !independent(*std::prev(next), c)) continue;
    accepted.insert(c);
  }
  return {accepted.begin(), accepted.end()};
}

namespace {

PotSeries make_pot(const DischargeSeries& series, const std::vector<std::size_t>& peaks,
                   double threshold, double years) {
  PotSeries pot;
  pot.code = series.code;
  pot.threshold = threshold;
  pot.record_years = years;
  pot.record_start = series.time.front();
  pot.record_end = series.time.back();
  for (std::size_t i : peaks) {
    if (series.discharge[i] > threshold) {
      pot.peaks.push_back(series.discharge[i]);
      pot.times.push_back(series.time[i]);
    }
  }
  return pot;
}

}  // namespace

PotSeries extract_pot(const DischargeSeries& series, double threshold,
                      const IndependenceRule& rule) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw InputError("extract_pot: threshold must be positive");
  }
  const auto peaks = independent_peaks(series, rule);
  PotSeries pot = make_pot(series, peaks, threshold,
                           record_years(series, rule.missing_gap_days));
  if (pot.peaks.empty()) {
    throw EmptySeries("extract_pot: no exceedance of " + std::to_string(threshold) +
                      " in series '" + series.code + "'");
  }
  return pot;
}

ThresholdChoice select_threshold(const DischargeSeries& series, double target_rate,
                                 const IndependenceRule& rule) {
  if (!(target_rate > 0.0) || !std::isfinite(target_rate)) {
    throw InputError("select_threshold: target rate must be positive");
  }
  const auto peaks = independent_peaks(series, rule);
  const double years = record_years(series, rule.missing_gap_days);

  std::vector<double> positive;
  for (double q : series.discharge) {
    if (q > 0.0) positive.push_back(q);
  }
  if (positive.empty()) throw SelectionError("select_threshold: no positive discharge");
  std::sort(positive.begin(), positive.end());

  std::vector<double> peak_values;
  for (std::size_t i : peaks) peak_values.push_back(series.discharge[i]);
  std::sort(peak_values.begin(), peak_values.end());

  constexpr int kGrid = 200;
  for (int j = kGrid - 1; j >= 0; --j) {
    const double threshold = quantile_sorted(positive, static_cast<double>(j) / kGrid);
    const auto above = peak_values.end() -
                       std::upper_bound(peak_values.begin(), peak_values.end(), threshold);
    const double rate = static_cast<double>(above) / years;
    if (above > 0 && rate >= target_rate) return {threshold, rate};
  }
  throw SelectionError("select_threshold: no threshold reaches " +
                       std::to_string(target_rate) + " events/year (at most " +
                       std::to_string(static_cast<double>(peak_values.size()) / years) +
                       ")");
}

}  // namespace regflood
