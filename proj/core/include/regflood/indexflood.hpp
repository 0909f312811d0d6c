#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regflood/pot.hpp"

namespace regflood {

/// Station descriptors (one row of the metadata file).
struct StationMeta {
  std::string code;
  std::string name;
  double area_km2 = 0.0;
  double x_km = 0.0;
  double y_km = 0.0;
  int record_start = 0;  ///< first year
  int record_end = 0;    ///< last year
};

enum class IndexFloodMethod { Empirical, GpFit };

std::string to_string(IndexFloodMethod method);
/// Accepts "empirical" or "gp-fit".
IndexFloodMethod parse_index_flood_method(std::string_view text);

struct IndexFlood {
  double c = 0.0;          ///< m3/s
  double var_log_c = 0.0;  ///< variance of log c; NaN when the fit has no covariance
};

/// The 1-year quantile, i.e. the exceedance quantile at p = 1 - 1/lambda.
/// GpFit: fixed-location MLE, delta-method variance. Empirical: type-7 sample
/// quantile with the asymptotic order-statistic variance (density estimated
/// by a Siddiqui difference quotient). Throws InputError when lambda <= 1.
IndexFlood at_site_index_flood(const PotSeries& pot,
                               IndexFloodMethod method = IndexFloodMethod::GpFit);

struct AreaPoint {
  std::string code;
  double area_km2 = 0.0;
  double index_flood = 0.0;
};

/// log c = log a + b log A by ordinary least squares.
struct AreaRegression {
  double a = 0.0;
  double b = 0.0;
  double r2 = 0.0;
  double s2 = 0.0;  ///< residual variance, RSS / (n - 2)
  int n = 0;
  double mean_log_area = 0.0;
  double sxx = 0.0;  ///< sum of squared log-area deviations
  std::vector<std::string> members;
  std::vector<std::string> excluded;
};

/// Fits the power law on every point whose code differs from `exclude`
/// (empty string excludes nothing). Needs >= 3 points after exclusion.
AreaRegression fit_area_regression(std::span<const AreaPoint> points,
                                   std::string_view exclude = {});

struct IndexFloodPrediction {
  double c_hat = 0.0;
  double var_log_c = 0.0;
};

/// c_hat = a A^b. With `include_residual` the variance is that of a new
/// observation, s2 (1 + 1/n + (log A - mean)^2 / Sxx); without it only the
/// uncertainty of the fitted mean, s2 (1/n + (log A - mean)^2 / Sxx).
IndexFloodPrediction predict_index_flood(const AreaRegression& reg, double area_km2,
                                         bool include_residual = true);

}  // namespace regflood
