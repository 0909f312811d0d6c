#include "regflood/lmoments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace regflood {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> sorted_copy(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  for (double x : sorted) {
    if (!std::isfinite(x)) throw InputError("L-moments: non-finite value in sample");
  }
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace

double sample_pwm(std::span<const double> sorted, int order, PwmVariant variant) {
  return sample_pwm<double>(sorted, order, variant);
}

std::array<double, 4> sample_lmoment_values(std::span<const double> sample,
                                            PwmVariant variant) {
  if (sample.empty()) throw InsufficientData("L-moments: empty sample");
  const auto sorted = sorted_copy(sample);
  return lmoments_from_sorted<double>(sorted, variant, kNaN);
}

LmomentSet sample_lmoments(std::span<const double> sample, PwmVariant variant) {
  if (sample.size() < 2) {
    throw InsufficientData("sample_lmoments: need at least 2 values, got " +
                           std::to_string(sample.size()));
  }
  const auto l = sample_lmoment_values(sample, variant);
  if (!(l[1] > 0.0)) {
    throw DegenerateSample("sample_lmoments: zero L-scale (constant sample)");
  }
  LmomentSet out;
  out.l1 = l[0];
  out.l2 = l[1];
  out.t = l[1] / l[0];
  out.t3 = l[2] / l[1];
  out.t4 = l[3] / l[1];
  return out;
}

LmomentSet gp_population_lmoments(const GpParams& params) {
  validate(params);
  const double xi = params.shape;
  if (!(xi < 1.0)) throw DomainError("GP mean does not exist for shape >= 1");
  LmomentSet lm;
  lm.l1 = params.location + params.scale / (1.0 - xi);
  lm.l2 = params.scale / ((1.0 - xi) * (2.0 - xi));
  lm.t = lm.l2 / lm.l1;
  lm.t3 = (1.0 + xi) / (3.0 - xi);
  lm.t4 = (1.0 + xi) * (2.0 + xi) / ((3.0 - xi) * (4.0 - xi));
  return lm;
}

GpParams gp_fit_lmom(const LmomentSet& lm, std::optional<double> location) {
  if (!(lm.l2 > 0.0) || !std::isfinite(lm.l1)) {
    throw DegenerateSample("gp_fit_lmom: L-scale must be positive");
  }
  GpParams out;
  if (location) {
    const double excess = lm.l1 - *location;
    if (!(excess > 0.0)) {
      throw FitError("gp_fit_lmom: mean must exceed the known location");
    }
    out.shape = 2.0 - excess / lm.l2;
    if (!(out.shape < 1.0)) throw FitError("gp_fit_lmom: implied shape >= 1");
    out.location = *location;
    out.scale = excess * (1.0 - out.shape);
    return out;
  }
  if (!std::isfinite(lm.t3) || !(std::abs(lm.t3) < 1.0)) {
    throw FitError("gp_fit_lmom: L-skewness must lie in (-1, 1)");
  }
  out.shape = (3.0 * lm.t3 - 1.0) / (1.0 + lm.t3);
  if (!(out.shape < 1.0)) throw FitError("gp_fit_lmom: implied shape >= 1");
  out.scale = lm.l2 * (1.0 - out.shape) * (2.0 - out.shape);
  out.location = lm.l1 - out.scale / (1.0 - out.shape);
  return out;
}

LmomentSet regional_average_lmoments(std::span<const SiteLmoments> sites,
                                     RescaleMode mode) {
  if (sites.size() < 2) {
    throw InsufficientData("regional average needs at least 2 sites");
  }
  double total_weight = 0.0;
  double l1 = 0.0, l2 = 0.0, t3 = 0.0, t4 = 0.0;
  for (const auto& site : sites) {
    if (!(site.lm.l2 > 0.0)) {
      throw DegenerateSample("regional average: site with zero L-scale");
    }
    if (!(site.weight > 0.0)) throw InputError("regional average: weight must be positive");
    double scale = site.lm.l1;
    if (mode == RescaleMode::OneYearQuantile) {
      if (!(site.index_flood > 0.0)) {
        throw InputError("regional average: index flood must be positive");
      }
      scale = site.index_flood;
    }
    const double w = site.weight;
    total_weight += w;
    l1 += w * site.lm.l1 / scale;
    l2 += w * site.lm.l2 / scale;
    t3 += w * site.lm.t3;
    t4 += w * site.lm.t4;
  }
  LmomentSet out;
  out.l1 = l1 / total_weight;
  out.l2 = l2 / total_weight;
  out.t = out.l2 / out.l1;
  out.t3 = t3 / total_weight;
  out.t4 = t4 / total_weight;
  if (mode == RescaleMode::Mean) out.l1 = 1.0;
  return out;
}

}  // namespace regflood
