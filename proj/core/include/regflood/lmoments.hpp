#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regflood/distributions.hpp"
#include "regflood/error.hpp"

namespace regflood {

enum class PwmVariant { Unbiased, Biased };

/// Probability weighted moment b_r of an ascending sample.
///
/// Unbiased:  b_r = n^-1 sum_j [(j-1)...(j-r)] / [(n-1)...(n-r)] x_(j)
/// Biased:    b_r = n^-1 sum_j p_j^r x_(j),  p_j = (j - 0.35) / n
///
/// Templated on the number type so exact rationals can run the same code.
/// Requires n > r (the unbiased weights need r distinct lower order
/// statistics).
template <class T>
T sample_pwm(std::span<const T> sorted, int order, PwmVariant variant) {
  const std::size_t n = sorted.size();
  if (order < 0 || order > 3) throw InputError("sample_pwm: order must be 0..3");
  if (n <= static_cast<std::size_t>(order) || n == 0) {
    throw InsufficientData("sample_pwm: need more than " +
                           std::to_string(order) + " values for b_" +
                           std::to_string(order));
  }
  T sum = T(0);
  for (std::size_t j = 1; j <= n; ++j) {
    T weight = T(1);
    if (variant == PwmVariant::Unbiased) {
      for (int i = 1; i <= order; ++i) {
        weight *= T(static_cast<long>(j) - i) / T(static_cast<long>(n) - i);
      }
    } else {
      const T pp = (T(static_cast<long>(j)) - T(7) / T(20)) /
                   T(static_cast<long>(n));
      for (int i = 0; i < order; ++i) weight *= pp;
    }
    sum += weight * sorted[j - 1];
  }
  return sum / T(static_cast<long>(n));
}

/// l1..l4 from the PWMs of an ascending sample. Entries whose PWM order is
/// not available for this n are left at the `missing` value.
template <class T>
std::array<T, 4> lmoments_from_sorted(std::span<const T> sorted,
                                      PwmVariant variant, T missing) {
  const std::size_t n = sorted.size();
  std::array<T, 4> b{missing, missing, missing, missing};
  for (int r = 0; r < 4; ++r) {
    if (n > static_cast<std::size_t>(r)) b[r] = sample_pwm(sorted, r, variant);
  }
  std::array<T, 4> l{missing, missing, missing, missing};
  if (n >= 1) l[0] = b[0];
  if (n >= 2) l[1] = T(2) * b[1] - b[0];
  if (n >= 3) l[2] = T(6) * b[2] - T(6) * b[1] + b[0];
  if (n >= 4) l[3] = T(20) * b[3] - T(30) * b[2] + T(12) * b[1] - b[0];
  return l;
}

/// Sample L-moment statistics.
struct LmomentSet {
  double l1 = 0.0;
  double l2 = 0.0;
  double t = 0.0;   ///< L-CV, l2 / l1
  double t3 = 0.0;  ///< L-skewness
  double t4 = 0.0;  ///< L-kurtosis
};

double sample_pwm(std::span<const double> sorted, int order, PwmVariant variant);

/// l1..l4 of an unsorted sample without forming ratios; never throws on a
/// constant sample. Unavailable orders (n < 4) are NaN. Requires n >= 1.
std::array<double, 4> sample_lmoment_values(
    std::span<const double> sample, PwmVariant variant = PwmVariant::Unbiased);

/// L-moments and ratios. Requires n >= 2; with n = 2 or 3 the ratios that need
/// higher orders are NaN. Throws DegenerateSample when l2 == 0.
LmomentSet sample_lmoments(std::span<const double> sample,
                           PwmVariant variant = PwmVariant::Unbiased);

/// Population L-moments of a GP law (shape < 1).
LmomentSet gp_population_lmoments(const GpParams& params);

/// Method of L-moments for the GP law.
///
/// Known location mu: shape = 2 - (l1 - mu) / l2, scale = (l1 - mu)(1 - shape).
/// Free location: shape from t3 = (1 + shape) / (3 - shape), then scale from
/// l2 and location from l1. Throws FitError when the implied shape is >= 1.
GpParams gp_fit_lmom(const LmomentSet& lm,
                     std::optional<double> location = std::nullopt);

/// Population L-moments of a kappa law; throws DomainError where they do not
/// exist.
LmomentSet kappa_population_lmoments(const KappaParams& params);

/// L-moment ratios (t3, t4) as functions of (k, h) alone.
std::array<double, 2> kappa_ratios(double k, double h);

/// Fit kappa to (l1, l2, t3, t4) by Newton iteration on (k, h).
/// Throws DomainError outside the attainable region and FitError when Newton
/// does not converge within 100 iterations.
KappaParams kappa_fit_lmom(const LmomentSet& lm);

enum class RescaleMode { Mean, OneYearQuantile };

struct SiteLmoments {
  LmomentSet lm;
  double weight = 1.0;  ///< record length n_i
  /// Index flood used in OneYearQuantile mode; ignored in Mean mode.
  double index_flood = 0.0;
};

/// Record-length weighted regional average of dimensionless L-moments.
/// Mean mode divides each site by its l1 (so l1^R = 1); OneYearQuantile mode
/// divides by the supplied index flood. Requires >= 2 sites.
LmomentSet regional_average_lmoments(std::span<const SiteLmoments> sites,
                                     RescaleMode mode = RescaleMode::Mean);

}  // namespace regflood
