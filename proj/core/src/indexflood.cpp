#include "regflood/indexflood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regflood/error.hpp"
#include "regflood/fit.hpp"

namespace regflood {
namespace {

double quantile_type7(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string to_string(IndexFloodMethod method) {
  return method == IndexFloodMethod::Empirical ? "empirical" : "gp-fit";
}

IndexFloodMethod parse_index_flood_method(std::string_view text) {
  if (text == "empirical") return IndexFloodMethod::Empirical;
  if (text == "gp-fit" || text == "gpfit" || text == "gp_fit") return IndexFloodMethod::GpFit;
  throw InputError("unknown index-flood method '" + std::string(text) +
                   "' (expected empirical or gp-fit)");
}

IndexFlood at_site_index_flood(const PotSeries& pot, IndexFloodMethod method) {
  const double lambda = pot.rate();
  if (!(lambda > 1.0)) {
    throw InputError("index flood of '" + pot.code + "': the 1-year quantile needs more than " +
                     "one event per year (rate " + std::to_string(lambda) + ")");
  }
  IndexFlood out;
  if (method == IndexFloodMethod::GpFit) {
    const GpFit fit = gp_fit_mle(pot, LocationMode::Fixed);
    out.c = return_level(fit.params, lambda, 1.0);
    // A boundary fit has no covariance; the point value is still usable.
    out.var_log_c = fit.has_covariance()
                        ? return_level_variance(fit, lambda, 1.0) / (out.c * out.c)
                        : std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  if (pot.peaks.size() < 2) {
    throw InsufficientData("empirical index flood needs at least 2 exceedances");
  }
  std::vector<double> sorted = pot.peaks;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double p = 1.0 - 1.0 / lambda;
  out.c = quantile_type7(sorted, p);
  const double h = 0.5 * std::pow(n, -1.0 / 3.0);
  const double p_lo = std::max(p - h, 0.0);
  const double p_hi = std::min(p + h, 1.0);
  const double spread = quantile_type7(sorted, p_hi) - quantile_type7(sorted, p_lo);
  if (!(spread > 0.0)) {
    throw NumericalError("empirical index flood: zero spread around the 1-year quantile");
  }
  const double density = (p_hi - p_lo) / spread;
  const double var_c = p * (1.0 - p) / (n * density * density);
  out.var_log_c = var_c / (out.c * out.c);
  return out;
}

AreaRegression fit_area_regression(std::span<const AreaPoint> points, std::string_view exclude) {
  AreaRegression reg;
  std::vector<double> lx, ly;
  for (const auto& pt : points) {
    if (!exclude.empty() && pt.code == exclude) {
      reg.excluded.push_back(pt.code);
      continue;
    }
    if (!(pt.area_km2 > 0.0) || !(pt.index_flood > 0.0) || !std::isfinite(pt.area_km2) ||
        !std::isfinite(pt.index_flood)) {
      throw InputError("area regression: area and index flood of '" + pt.code +
                       "' must be positive");
    }
    reg.members.push_back(pt.code);
    lx.push_back(std::log(pt.area_km2));
    ly.push_back(std::log(pt.index_flood));
  }
  if (lx.size() < 3) {
    throw InsufficientData("area regression needs at least 3 sites after exclusion, got " +
                           std::to_string(lx.size()));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("area regression: all drainage areas are equal");
  reg.b = sxy / sxx;
  const double intercept = my - reg.b * mx;
  reg.a = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - intercept - reg.b * lx[i];
    rss += r * r;
  }
  reg.n = static_cast<int>(lx.size());
  reg.s2 = rss / (n - 2.0);
  reg.r2 = syy > 0.0 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
  reg.mean_log_area = mx;
  reg.sxx = sxx;
  return reg;
}

IndexFloodPrediction predict_index_flood(const AreaRegression& reg, double area_km2,
                                         bool include_residual) {
  if (!(area_km2 > 0.0) || !std::isfinite(area_km2)) {
    throw InputError("predict_index_flood: area must be positive");
  }
  if (reg.n < 3 || !(reg.sxx > 0.0)) throw InputError("predict_index_flood: regression not fitted");
  const double d = std::log(area_km2) - reg.mean_log_area;
  IndexFloodPrediction out;
  out.c_hat = reg.a * std::pow(area_km2, reg.b);
  out.var_log_c = reg.s2 * ((include_residual ? 1.0 : 0.0) + 1.0 / reg.n + d * d / reg.sxx);
  return out;
}

}  // namespace regflood
