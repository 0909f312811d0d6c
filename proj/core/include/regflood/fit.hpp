#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

#include "regflood/distributions.hpp"
#include "regflood/lmoments.hpp"
#include "regflood/pot.hpp"

namespace regflood {

enum class FitMethod { MLE, PWU, PWB };

std::string to_string(FitMethod method);
/// Accepts "mle", "pwu", "pwb" in any case; throws InputError otherwise.
FitMethod parse_fit_method(std::string_view text);

enum class LocationMode { Fixed, Free };

/// Result of a local GP fit.
struct GpFit {
  GpParams params;
  /// (scale, shape) when the location is fixed, (location, scale, shape)
  /// otherwise. Empty when unavailable.
  Eigen::MatrixXd covariance;
  double loglik = 0.0;
  FitMethod method = FitMethod::MLE;
  bool location_fixed = true;
  /// Free-location MLE pinned against the support guard min(x) - 1e-6 scale.
  bool at_support_boundary = false;
  /// MLE with no interior maximum: shape = -1 and scale reaching max(x).
  bool at_shape_boundary = false;
  /// Covariance came from resampling instead of asymptotic formulas.
  bool bootstrap_covariance = false;
  std::size_t n = 0;

  bool has_covariance() const { return covariance.size() > 0; }
};

/// Sum of GP log-densities; -inf when any value is off the support.
double gp_loglik(const GpParams& params, std::span<const double> x);

/// Maximum likelihood. `location` fixes mu; nullopt estimates it subject to
/// mu <= min(x) - 1e-6 scale. BFGS from five starts (the PWU estimate and
/// +-20% perturbations of it) followed by Newton refinement; the covariance is
/// the inverse observed information. The search is restricted to shape > -1;
/// when the likelihood keeps rising towards that edge the uniform law at
/// shape = -1 is returned with `at_shape_boundary` set and no covariance.
GpFit gp_fit_mle(std::span<const double> x, std::optional<double> location);
GpFit gp_fit_mle(const PotSeries& pot, LocationMode mode = LocationMode::Fixed);

/// PWM estimator with the location fixed at `location`. Covariance from the
/// asymptotic formulas, or from 500 bootstrap resamples when the shape
/// estimate exceeds 0.4.
GpFit gp_fit_pwm(std::span<const double> x, double location, PwmVariant variant,
                 std::uint64_t bootstrap_seed = 20050101);
GpFit gp_fit_pwm(const PotSeries& pot, PwmVariant variant);

/// Dispatches on method with the location fixed at the threshold.
GpFit gp_fit(const PotSeries& pot, FitMethod method);

/// Non-exceedance probability of the T-year level: 1 - 1/(lambda T).
double return_probability(double lambda, double period);

/// Quantile with return period T years for events arriving at lambda per year.
double return_level(const GpParams& params, double lambda, double period);

struct ConfidenceInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool lower_bounded = true;  ///< false when the profile never crossed the cutoff
  bool upper_bounded = true;
};

/// Profile-likelihood interval for the T-year level of a fixed-location GP.
/// The likelihood is reparameterized in (Q_T, shape); shape is profiled out on
/// [-1, 2]. Endpoints are bisected to 1e-4 relative within [Q/10, 10 Q].
ConfidenceInterval profile_ci(std::span<const double> x, double location,
                              double lambda, double period, double level = 0.90);
ConfidenceInterval profile_ci(const PotSeries& pot, double lambda, double period,
                              double level = 0.90);

/// Delta-method variance of the T-year level from a fit covariance.
double return_level_variance(const GpFit& fit, double lambda, double period);

/// Delta-method interval for the T-year level from a fit covariance.
ConfidenceInterval delta_ci(const GpFit& fit, double lambda, double period,
                            double level = 0.90);

struct LogParamVariances {
  double var_log_location = 0.0;
  double var_log_scale = 0.0;
  double var_shape = 0.0;
  /// var_log_location came from the threshold-uncertainty CV, not the fit.
  bool location_from_cv = false;
};

/// Var[log mu], Var[log sigma], Var[xi] from a fit covariance. For
/// fixed-location fits Var[log mu] = threshold_cv^2.
LogParamVariances log_param_variances(const GpFit& fit, double threshold_cv = 0.1);

}  // namespace regflood
