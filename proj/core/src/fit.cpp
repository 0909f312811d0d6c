#include "regflood/fit.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "optimize.hpp"
#include "regflood/error.hpp"
#include "regflood/log.hpp"
#include "regflood/rng.hpp"

namespace regflood {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSupportGuard = 1e-6;
constexpr double kGradTol = 1e-8;

// L(u) = log1p(u) / u and its first two derivatives.
struct LogRatio {
  double v, d1, d2;
};

LogRatio log1p_ratio(double u) {
  if (std::abs(u) < 0.1) {
    LogRatio r{0.0, 0.0, 0.0};
    double pw = 1.0;  // u^k
    for (int k = 0; k < 40; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      r.v += sign * pw / (k + 1);
      if (k + 1 < 40) r.d1 += -sign * (k + 1) * pw / (k + 2);
      if (k + 2 < 40) r.d2 += sign * (k + 2) * (k + 1) * pw / (k + 3);
      pw *= u;
    }
    return r;
  }
  const double f = std::log1p(u);
  LogRatio r;
  r.v = f / u;
  r.d1 = (1.0 / (1.0 + u) - r.v) / u;
  r.d2 = (-1.0 / ((1.0 + u) * (1.0 + u)) - 2.0 * r.d1) / u;
  return r;
}

// Log-likelihood with gradient and Hessian in theta = (mu, sigma, xi).
// Written as l = -log sigma - log1p(u) - z L(u), u = xi z, which is smooth
// through xi = 0.
struct LikDerivs {
  double value = -kInf;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

LikDerivs loglik_derivs(const Eigen::Vector3d& theta, std::span<const double> x,
                        bool want_hess) {
  LikDerivs out;
  const double mu = theta[0], sigma = theta[1], xi = theta[2];
  if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(xi)) return out;
  const double log_sigma = std::log(sigma);
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
  for (double xk : x) {
    const double z = (xk - mu) / sigma;
    const double u = xi * z;
    if (z < 0.0 || !(1.0 + u > 0.0)) return out;
    const LogRatio lr = log1p_ratio(u);
    value += -log_sigma - std::log1p(u) - z * lr.v;

    const double inv1u = 1.0 / (1.0 + u);
    const double phi_z = lr.v;
    const double phi_u = inv1u + z * lr.d1;
    const std::array<double, 3> dz{-1.0 / sigma, -z / sigma, 0.0};
    std::array<double, 3> du{};
    for (int a = 0; a < 3; ++a) du[a] = xi * dz[a] + (a == 2 ? z : 0.0);
    for (int a = 0; a < 3; ++a) {
      grad[a] -= phi_z * dz[a] + phi_u * du[a];
    }
    grad[1] -= 1.0 / sigma;
    if (!want_hess) continue;

    const double phi_zu = lr.d1;
    const double phi_uu = -inv1u * inv1u + z * lr.d2;
    const double s2 = sigma * sigma;
    // Second derivatives of z; all xi-related entries vanish.
    std::array<std::array<double, 3>, 3> dzz{};
    dzz[0][1] = dzz[1][0] = 1.0 / s2;
    dzz[1][1] = 2.0 * z / s2;
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        const double duu = xi * dzz[a][b] + (a == 2 ? dz[b] : 0.0) + (b == 2 ? dz[a] : 0.0);
        const double phi_ab = phi_zu * (dz[a] * du[b] + du[a] * dz[b]) +
                              phi_uu * du[a] * du[b] + phi_z * dzz[a][b] + phi_u * duu;
        hess(a, b) -= phi_ab;
      }
    }
    hess(1, 1) += 1.0 / s2;
  }
  if (want_hess) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < a; ++b) hess(a, b) = hess(b, a);
    }
  }
  out.value = value;
  out.grad = grad;
  out.hess = hess;
  return out;
}

// Unconstrained coordinates psi and their map to theta.
//   fixed location: psi = (log sigma, xi)
//   free location:  psi = (eta, log sigma, xi), mu = xmin - sigma (guard + e^eta)
struct Param {
  bool free;
  double fixed_mu;
  double xmin;

  Eigen::Index dim() const { return free ? 3 : 2; }

  Eigen::Vector3d theta(const Eigen::VectorXd& psi) const {
    if (!free) return {fixed_mu, std::exp(psi[0]), psi[1]};
    const double sigma = std::exp(psi[1]);
    return {xmin - sigma * (kSupportGuard + std::exp(psi[0])), sigma, psi[2]};
  }

  Eigen::VectorXd psi(const GpParams& p) const {
    if (!free) return Eigen::Vector2d(std::log(p.scale), p.shape);
    const double gap = (xmin - p.location) / p.scale - kSupportGuard;
    return Eigen::Vector3d(std::log(std::max(gap, 1e-3)), std::log(p.scale), p.shape);
  }

  // Jacobian d theta / d psi (3 x dim).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& psi) const {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, dim());
    if (!free) {
      j(1, 0) = std::exp(psi[0]);
      j(2, 1) = 1.0;
      return j;
    }
    const double sigma = std::exp(psi[1]);
    const double e = std::exp(psi[0]);
    j(0, 0) = -sigma * e;
    j(0, 1) = -sigma * (kSupportGuard + e);
    j(1, 1) = sigma;
    j(2, 2) = 1.0;
    return j;
  }

  // sum_k l_k d2 theta_k / d psi d psi
  Eigen::MatrixXd curvature(const Eigen::VectorXd& psi, const Eigen::Vector3d& g) const {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim(), dim());
    if (!free) {
      c(0, 0) = g[1] * std::exp(psi[0]);
      return c;
    }
    const double sigma = std::exp(psi[1]);
    const double e = std::exp(psi[0]);
    c(0, 0) = -g[0] * sigma * e;
    c(0, 1) = c(1, 0) = -g[0] * sigma * e;
    c(1, 1) = -g[0] * sigma * (kSupportGuard + e) + g[1] * sigma;
    return c;
  }
};

struct Problem {
  Param param;
  std::span<const double> x;

  double objective(const Eigen::VectorXd& psi, Eigen::VectorXd* grad) const {
    const Eigen::Vector3d theta = param.theta(psi);
    // Beyond xi = -1 the likelihood is unbounded near the upper endpoint.
    if (!(theta[2] > -1.0)) return kInf;
    const LikDerivs d = loglik_derivs(theta, x, false);
    if (!std::isfinite(d.value)) return kInf;
    const double n = static_cast<double>(x.size());
    if (grad) *grad = -(param.jacobian(psi).transpose() * d.grad) / n;
    return -d.value / n;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& psi) const {
    const Eigen::Vector3d theta = param.theta(psi);
    const LikDerivs d = loglik_derivs(theta, x, true);
    const Eigen::MatrixXd j = param.jacobian(psi);
    const double n = static_cast<double>(x.size());
    return -(j.transpose() * d.hess * j + param.curvature(psi, d.grad)) / n;
  }
};

// Makes a start feasible: every point inside the support.
GpParams feasible_start(GpParams p, double xmin, double xmax, bool free) {
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) p.scale = std::max(xmax - xmin, 1e-3);
  if (!std::isfinite(p.shape)) p.shape = 0.0;
  p.shape = std::clamp(p.shape, -0.9, 0.95);
  if (free && !(p.location < xmin - kSupportGuard * p.scale)) {
    p.location = xmin - 0.05 * p.scale;
  }
  if (p.shape < 0.0) {
    const double needed = -p.shape * (xmax - p.location) * 1.05;
    p.scale = std::max(p.scale, needed);
  }
  return p;
}

void check_sample(std::span<const double> x, std::size_t min_n, const char* who) {
  if (x.size() < min_n) {
    throw InsufficientData(std::string(who) + ": need at least " + std::to_string(min_n) +
                           " exceedances, got " + std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError(std::string(who) + ": non-finite exceedance");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw FitError(std::string(who) + ": all exceedances are equal");
}

double growth_factor(double shape, double a) {
  return std::abs(shape) < kShapeSwitch ? a : std::expm1(shape * a) / shape;
}

double growth_factor_deriv(double shape, double a) {
  if (std::abs(shape) < 1e-5) return a * a / 2.0 + shape * a * a * a / 6.0;
  return (shape * a * std::exp(shape * a) - std::expm1(shape * a)) / (shape * shape);
}

double exceedance_log_time(double lambda, double period) {
  // a = -log(1 - p) with 1 - p = 1 / (lambda T)
  return std::log(lambda * period);
}

}  // namespace

std::string to_string(FitMethod method) {
  switch (method) {
    case FitMethod::MLE: return "MLE";
    case FitMethod::PWU: return "PWU";
    case FitMethod::PWB: return "PWB";
  }
  return "?";
}

FitMethod parse_fit_method(std::string_view text) {
  std::string lower(text);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "mle") return FitMethod::MLE;
  if (lower == "pwu") return FitMethod::PWU;
  if (lower == "pwb") return FitMethod::PWB;
  throw InputError("unknown fit method '" + std::string(text) + "' (expected mle, pwu or pwb)");
}

double gp_loglik(const GpParams& params, std::span<const double> x) {
  double total = 0.0;
  for (double v : x) {
    const double lp = gp_logpdf(params, v);
    if (!std::isfinite(lp)) return -kInf;
    total += lp;
  }
  return total;
}

GpFit gp_fit_mle(std::span<const double> x, std::optional<double> location) {
  const bool free = !location.has_value();
  check_sample(x, free ? 8 : 5, "gp_fit_mle");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double xmin = *lo_it, xmax = *hi_it;
  if (!free && xmin < *location) {
    throw InputError("gp_fit_mle: exceedances below the fixed location");
  }
  if (!free && !(xmax > *location)) throw FitError("gp_fit_mle: no excess over the location");

  // PWU start.
  GpParams base;
  try {
    if (free) {
      base = gp_fit_lmom(sample_lmoments(x));
    } else {
      const auto l = sample_lmoment_values(x);
      LmomentSet lm;
      lm.l1 = l[0];
      lm.l2 = l[1];
      base = gp_fit_lmom(lm, *location);
    }
  } catch (const NumericalError&) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    base = {free ? xmin : *location, std::max(mean - (free ? xmin : *location), 1e-6), 0.0};
  }
  if (!free) base.location = *location;

  const Problem problem{Param{free, free ? 0.0 : *location, xmin}, x};
  const detail::Objective f = [&](const Eigen::VectorXd& psi, Eigen::VectorXd* g) {
    return problem.objective(psi, g);
  };
  const detail::HessianFn h = [&](const Eigen::VectorXd& psi) { return problem.hessian(psi); };

  const double dxi = 0.2 * std::max(std::abs(base.shape), 0.5);
  const std::array<std::array<double, 2>, 5> perturb{
      {{1.0, 0.0}, {1.2, 0.0}, {0.8, 0.0}, {1.0, dxi}, {1.0, -dxi}}};

  detail::MinimizeResult best;
  best.value = kInf;
  for (const auto& pert : perturb) {
    GpParams start = base;
    start.scale *= pert[0];
    start.shape += pert[1];
    start = feasible_start(start, xmin, xmax, free);
    auto res = detail::bfgs_minimize(f, problem.param.psi(start), kGradTol);
    if (!std::isfinite(res.value)) continue;
    res = detail::newton_polish(f, h, res.x, kGradTol);
    if (!res.converged) continue;
    if (res.value < best.value) best = res;
  }
  // xi = -1 is the uniform law on [mu, max(x)]; its log-likelihood
  // -n log(sigma) is the supremum along the boundary of the regular region.
  const double n = static_cast<double>(x.size());
  const double b_sigma = free ? (xmax - xmin) / (1.0 - kSupportGuard) : xmax - *location;
  const double b_loglik = -n * std::log(b_sigma);
  if (!best.converged && !(b_loglik > -kInf)) {
    throw FitError("gp_fit_mle: optimizer did not converge from any start (n = " +
                   std::to_string(x.size()) + ")");
  }
  if (!best.converged || b_loglik > -n * best.value) {
    log::warn("gp_fit_mle: likelihood has no interior maximum (n = " + std::to_string(x.size()) +
              "); using the shape = -1 boundary, covariance unavailable");
    GpFit fit;
    fit.params = {free ? xmax - b_sigma : *location, b_sigma, -1.0};
    fit.method = FitMethod::MLE;
    fit.location_fixed = !free;
    fit.n = x.size();
    fit.at_support_boundary = free;
    fit.at_shape_boundary = true;
    fit.loglik = b_loglik;
    return fit;
  }

  const Eigen::Vector3d theta = problem.param.theta(best.x);
  GpFit fit;
  fit.params = {theta[0], theta[1], theta[2]};
  fit.method = FitMethod::MLE;
  fit.location_fixed = !free;
  fit.n = x.size();
  fit.at_support_boundary = free && std::exp(best.x[0]) < kSupportGuard;
  const LikDerivs d = loglik_derivs(theta, x, true);
  fit.loglik = d.value;

  Eigen::MatrixXd info = -d.hess;
  if (!free) info = info.bottomRightCorner(2, 2).eval();
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (info.allFinite() && llt.info() == Eigen::Success) {
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    fit.covariance = (cov + cov.transpose()) / 2.0;
  } else {
    log::warn("gp_fit_mle: observed information is not positive definite; covariance unavailable");
  }
  return fit;
}

GpFit gp_fit_mle(const PotSeries& pot, LocationMode mode) {
  if (mode == LocationMode::Fixed) return gp_fit_mle(pot.peaks, pot.threshold);
  return gp_fit_mle(pot.peaks, std::nullopt);
}

namespace {

GpParams pwm_params(std::span<const double> x, double location, PwmVariant variant) {
  const auto l = sample_lmoment_values(x, variant);
  LmomentSet lm;
  lm.l1 = l[0];
  lm.l2 = l[1];
  return gp_fit_lmom(lm, location);
}

}  // namespace

GpFit gp_fit_pwm(std::span<const double> x, double location, PwmVariant variant,
                 std::uint64_t bootstrap_seed) {
  check_sample(x, 4, "gp_fit_pwm");
  GpFit fit;
  fit.params = pwm_params(x, location, variant);
  fit.method = variant == PwmVariant::Unbiased ? FitMethod::PWU : FitMethod::PWB;
  fit.location_fixed = true;
  fit.n = x.size();
  fit.loglik = gp_loglik(fit.params, x);

  const double n = static_cast<double>(x.size());
  if (fit.params.shape <= 0.4) {
    // Hosking and Wallis (1987) with k = -shape; cov(sigma, xi) = -cov(alpha, k).
    const double k = -fit.params.shape;
    const double a = fit.params.scale;
    const double denom = n * (1.0 + 2.0 * k) * (3.0 + 2.0 * k);
    Eigen::Matrix2d cov;
    cov(0, 0) = a * a * (7.0 + 18.0 * k + 11.0 * k * k + 2.0 * k * k * k) / denom;
    cov(0, 1) = cov(1, 0) =
        -a * (2.0 + k) * (2.0 + 6.0 * k + 7.0 * k * k + 2.0 * k * k * k) / denom;
    cov(1, 1) = (1.0 + k) * (2.0 + k) * (2.0 + k) * (1.0 + k + 2.0 * k * k) / denom;
    fit.covariance = cov;
    return fit;
  }

  constexpr int kResamples = 500;
  Rng rng(bootstrap_seed);
  std::vector<double> resample(x.size());
  std::vector<Eigen::Vector2d> draws;
  draws.reserve(kResamples);
  for (int b = 0; b < kResamples; ++b) {
    for (auto& v : resample) v = x[rng.index(x.size())];
    try {
      const GpParams p = pwm_params(resample, location, variant);
      draws.emplace_back(p.scale, p.shape);
    } catch (const Error&) {
      // Resamples with an inadmissible shape are skipped.
    }
  }
  fit.bootstrap_covariance = true;
  if (draws.size() < 2) {
    log::warn("gp_fit_pwm: bootstrap produced too few usable resamples; covariance unavailable");
    return fit;
  }
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& d : draws) mean += d;
  mean /= static_cast<double>(draws.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& d : draws) cov += (d - mean) * (d - mean).transpose();
  fit.covariance = cov / static_cast<double>(draws.size() - 1);
  return fit;
}

GpFit gp_fit_pwm(const PotSeries& pot, PwmVariant variant) {
  return gp_fit_pwm(pot.peaks, pot.threshold, variant);
}

GpFit gp_fit(const PotSeries& pot, FitMethod method) {
  switch (method) {
    case FitMethod::MLE: return gp_fit_mle(pot, LocationMode::Fixed);
    case FitMethod::PWU: return gp_fit_pwm(pot, PwmVariant::Unbiased);
    case FitMethod::PWB: return gp_fit_pwm(pot, PwmVariant::Biased);
  }
  throw InputError("unknown fit method");
}

double return_probability(double lambda, double period) {
  if (!std::isfinite(lambda) || !std::isfinite(period) || !(lambda * period > 1.0)) {
    throw InputError("return level needs lambda * T > 1 (lambda = " + std::to_string(lambda) +
                     ", T = " + std::to_string(period) + ")");
  }
  return 1.0 - 1.0 / (lambda * period);
}

double return_level(const GpParams& params, double lambda, double period) {
  return_probability(lambda, period);
  validate(params);
  return params.location +
         params.scale * growth_factor(params.shape, exceedance_log_time(lambda, period));
}

ConfidenceInterval profile_ci(std::span<const double> x, double location, double lambda,
                              double period, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("profile_ci: level must lie in (0, 1)");
  return_probability(lambda, period);
  const GpFit fit = gp_fit_mle(x, location);
  const double a = exceedance_log_time(lambda, period);
  const double q_hat = return_level(fit.params, lambda, period);

  auto neg_loglik = [&](double q, double shape) {
    const double sigma = (q - location) / growth_factor(shape, a);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) return kInf;
    return -gp_loglik({location, sigma, shape}, x);
  };
  auto profile = [&](double q) {
    if (!(q > location)) return -kInf;
    constexpr int kGrid = 60;
    constexpr double kLo = -1.0, kHi = 2.0;
    const double step = (kHi - kLo) / kGrid;
    int best = -1;
    double best_value = kInf;
    for (int j = 0; j <= kGrid; ++j) {
      const double v = neg_loglik(q, kLo + step * j);
      if (v < best_value) {
        best_value = v;
        best = j;
      }
    }
    if (best < 0) return -kInf;
    const double lo = kLo + step * std::max(best - 1, 0);
    const double hi = kLo + step * std::min(best + 1, kGrid);
    const auto m = detail::brent_minimize([&](double s) { return neg_loglik(q, s); }, lo, hi);
    return -std::min(best_value, m.value);
  };

  const double l_max = std::max(fit.loglik, profile(q_hat));
  const double cutoff =
      boost::math::quantile(boost::math::chi_squared_distribution<double>(1.0), level);
  auto outside = [&](double q) { return 2.0 * (l_max - profile(q)) > cutoff; };

  ConfidenceInterval ci;
  ci.estimate = q_hat;
  const double tol = 1e-4 * std::abs(q_hat);

  double lo = std::max(q_hat / 10.0, location + 1e-12 * std::abs(q_hat));
  if (lo >= q_hat) lo = location + 0.5 * (q_hat - location);
  if (!outside(lo)) {
    ci.lower = lo;
    ci.lower_bounded = false;
  } else {
    double in = q_hat;
    while (in - lo > tol) {
      const double mid = 0.5 * (lo + in);
      (outside(mid) ? lo : in) = mid;
    }
    ci.lower = 0.5 * (lo + in);
  }

  double hi = 10.0 * q_hat;
  if (!outside(hi)) {
    ci.upper = hi;
    ci.upper_bounded = false;
  } else {
    double in = q_hat;
    while (hi - in > tol) {
      const double mid = 0.5 * (in + hi);
      (outside(mid) ? hi : in) = mid;
    }
    ci.upper = 0.5 * (in + hi);
  }
  ci.lower = std::min(ci.lower, q_hat);
  ci.upper = std::max(ci.upper, q_hat);
  return ci;
}

ConfidenceInterval profile_ci(const PotSeries& pot, double lambda, double period,
                              double level) {
  return profile_ci(pot.peaks, pot.threshold, lambda, period, level);
}

double return_level_variance(const GpFit& fit, double lambda, double period) {
  if (!fit.has_covariance()) throw NumericalError("return level variance: covariance unavailable");
  return_probability(lambda, period);
  const double a = exceedance_log_time(lambda, period);
  const double c = growth_factor(fit.params.shape, a);
  const double dc = growth_factor_deriv(fit.params.shape, a);
  Eigen::VectorXd g;
  if (fit.location_fixed) {
    g = Eigen::Vector2d(c, fit.params.scale * dc);
  } else {
    g = Eigen::Vector3d(1.0, c, fit.params.scale * dc);
  }
  return g.dot(fit.covariance * g);
}

ConfidenceInterval delta_ci(const GpFit& fit, double lambda, double period, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("delta_ci: level must lie in (0, 1)");
  const double q = return_level(fit.params, lambda, period);
  const double sd = std::sqrt(std::max(return_level_variance(fit, lambda, period), 0.0));
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(),
                                         0.5 + level / 2.0);
  return {q, q - z * sd, q + z * sd, true, true};
}

LogParamVariances log_param_variances(const GpFit& fit, double threshold_cv) {
  if (!fit.has_covariance()) {
    throw NumericalError("log_param_variances: fit covariance unavailable");
  }
  if (!(fit.params.scale > 0.0)) throw InputError("log_param_variances: scale must be positive");
  LogParamVariances out;
  const auto& c = fit.covariance;
  if (fit.location_fixed) {
    if (!(threshold_cv >= 0.0)) throw InputError("threshold CV must be >= 0");
    out.var_log_location = threshold_cv * threshold_cv;
    out.location_from_cv = true;
    out.var_log_scale = c(0, 0) / (fit.params.scale * fit.params.scale);
    out.var_shape = c(1, 1);
    return out;
  }
  if (!(fit.params.location > 0.0)) {
    throw InputError("log_param_variances: location must be positive for a log variance");
  }
  out.var_log_location = c(0, 0) / (fit.params.location * fit.params.location);
  out.var_log_scale = c(1, 1) / (fit.params.scale * fit.params.scale);
  out.var_shape = c(2, 2);
  return out;
}

}  // namespace regflood
