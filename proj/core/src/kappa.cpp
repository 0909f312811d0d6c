// Kappa L-moments and the method-of-L-moments kappa fit.
//
// With g_r as in Hosking (1994), the PWMs of the kappa law satisfy
//   r beta_{r-1} = location + scale * q_r,   q_r = (1 - g_r) / k,
// so every L-moment is a linear combination of q_1..q_4. q_r is evaluated as
// -expm1(L_r) / k with L_r = log g_r, and L_r / k is replaced by its Taylor
// series around k = 0 when |k| is small, which keeps the k -> 0 limit exact.

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>

#include "regflood/lmoments.hpp"

namespace regflood {
namespace {

constexpr double kTaylorBand = 1e-3;

struct Derivs {
  std::array<double, 4> d{};  // derivatives 1..4 of L_r at k = 0
};

double psi(int order, double x) { return boost::math::polygamma(order, x); }

Derivs taylor_at_zero(int r, double h) {
  Derivs out;
  if (std::abs(h) < kShapeSwitch) {
    out.d[0] = psi(0, 1.0) - std::log(static_cast<double>(r));
    for (int n = 1; n < 4; ++n) out.d[n] = psi(n, 1.0);
    return out;
  }
  if (h > 0.0) {
    const double a1 = r / h + 1.0;
    out.d[0] = -std::log(h) + psi(0, 1.0) - psi(0, a1);
    for (int n = 1; n < 4; ++n) out.d[n] = psi(n, 1.0) - psi(n, a1);
    return out;
  }
  const double c = -h;
  const double b = r / c;
  out.d[0] = -std::log(c) + psi(0, 1.0) - psi(0, b);
  // d^n/dk^n lgamma(b - k) = (-1)^n psi_{n-1}(b - k)
  for (int n = 1; n < 4; ++n) {
    const double sign = (n % 2 == 1) ? 1.0 : -1.0;
    out.d[n] = psi(n, 1.0) + sign * psi(n, b);
  }
  return out;
}

double log_g_direct(int r, double k, double h) {
  using boost::math::lgamma;
  using boost::math::tgamma_delta_ratio;
  const double lg1k = lgamma(1.0 + k);
  if (std::abs(h) < kShapeSwitch) {
    return lg1k - k * std::log(static_cast<double>(r));
  }
  if (h > 0.0) {
    const double a1 = r / h + 1.0;
    return -k * std::log(h) + lg1k + std::log(tgamma_delta_ratio(a1, k));
  }
  const double c = -h;
  const double b = r / c;
  return -k * std::log(c) + lg1k + std::log(tgamma_delta_ratio(b - k, k));
}

// q_r = (1 - g_r) / k, continuous through k = 0.
double q_term(int r, double k, double h) {
  double l_over_k = 0.0;
  if (std::abs(k) < kTaylorBand) {
    const Derivs t = taylor_at_zero(r, h);
    l_over_k = t.d[0] + k * (t.d[1] / 2.0 + k * (t.d[2] / 6.0 + k * t.d[3] / 24.0));
  } else {
    l_over_k = log_g_direct(r, k, h) / k;
  }
  const double l = k * l_over_k;
  const double ratio = (l == 0.0) ? 1.0 : std::expm1(l) / l;
  return -l_over_k * ratio;
}

bool region_ok(double k, double h) {
  if (!std::isfinite(k) || !std::isfinite(h)) return false;
  if (!(k > -1.0)) return false;
  if (h < 0.0 && !(h * k > -1.0)) return false;
  return std::abs(h) < 1e3 && std::abs(k) < 1e3;
}

std::array<double, 4> q_terms(double k, double h) {
  return {q_term(1, k, h), q_term(2, k, h), q_term(3, k, h), q_term(4, k, h)};
}

}  // namespace

std::array<double, 2> kappa_ratios(double k, double h) {
  if (!region_ok(k, h)) {
    throw DomainError("kappa L-moments do not exist for these (k, h)");
  }
  const auto q = q_terms(k, h);
  const double d = q[1] - q[0];
  return {(2.0 * q[2] - 3.0 * q[1] + q[0]) / d,
          (5.0 * q[3] - 10.0 * q[2] + 6.0 * q[1] - q[0]) / d};
}

LmomentSet kappa_population_lmoments(const KappaParams& params) {
  if (!(params.scale > 0.0) || !region_ok(params.k, params.h)) {
    throw DomainError("kappa L-moments do not exist for these parameters");
  }
  const auto q = q_terms(params.k, params.h);
  LmomentSet lm;
  lm.l1 = params.location + params.scale * q[0];
  lm.l2 = params.scale * (q[1] - q[0]);
  lm.t = lm.l2 / lm.l1;
  const auto ratios = kappa_ratios(params.k, params.h);
  lm.t3 = ratios[0];
  lm.t4 = ratios[1];
  return lm;
}

KappaParams kappa_fit_lmom(const LmomentSet& lm) {
  const double t3 = lm.t3;
  const double t4 = lm.t4;
  if (!(lm.l2 > 0.0)) throw DegenerateSample("kappa fit: L-scale must be positive");
  if (!(std::abs(t3) < 1.0) || !std::isfinite(t4)) {
    throw DomainError("kappa fit: L-skewness outside (-1, 1)");
  }
  if (t4 >= (1.0 + 5.0 * t3 * t3) / 6.0) {
    throw DomainError("kappa fit: (t3, t4) above the generalized logistic bound");
  }
  if (t4 < (5.0 * t3 * t3 - 1.0) / 4.0) {
    throw DomainError("kappa fit: (t3, t4) below the attainable L-moment bound");
  }

  const Eigen::Vector2d target(t3, t4);
  auto residual = [&](double k, double h) {
    const auto r = kappa_ratios(k, h);
    return Eigen::Vector2d(r[0] - target[0], r[1] - target[1]);
  };

  // Start from the GP member (h = 1) with the same L-skewness.
  double k = std::max((1.0 - 3.0 * t3) / (1.0 + t3), -0.99);
  double h = 1.0;
  Eigen::Vector2d f = residual(k, h);
  constexpr double kTol = 1e-8;
  constexpr double kStep = 1e-6;

  for (int iter = 0; iter < 100; ++iter) {
    if (f.lpNorm<Eigen::Infinity>() < kTol) {
      KappaParams out;
      out.k = k;
      out.h = h;
      const auto q = q_terms(k, h);
      out.scale = lm.l2 / (q[1] - q[0]);
      out.location = lm.l1 - out.scale * q[0];
      if (!(out.scale > 0.0)) throw FitError("kappa fit: non-positive scale");
      return out;
    }
    Eigen::Matrix2d jac;
    const std::array<double, 2> x{k, h};
    for (int j = 0; j < 2; ++j) {
      auto xp = x, xm = x;
      xp[j] += kStep;
      xm[j] -= kStep;
      const bool ok_p = region_ok(xp[0], xp[1]);
      const bool ok_m = region_ok(xm[0], xm[1]);
      if (ok_p && ok_m) {
        jac.col(j) = (residual(xp[0], xp[1]) - residual(xm[0], xm[1])) / (2 * kStep);
      } else if (ok_p) {
        jac.col(j) = (residual(xp[0], xp[1]) - f) / kStep;
      } else {
        jac.col(j) = (f - residual(xm[0], xm[1])) / kStep;
      }
    }
    const Eigen::FullPivLU<Eigen::Matrix2d> lu(jac);
    if (!lu.isInvertible()) throw FitError("kappa fit: singular Jacobian");
    const Eigen::Vector2d step = -lu.solve(f);

    double lambda = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
      const double kn = k + lambda * step[0];
      const double hn = h + lambda * step[1];
      if (!region_ok(kn, hn)) continue;
      const Eigen::Vector2d fn = residual(kn, hn);
      if (fn.allFinite() && fn.norm() < f.norm()) {
        k = kn;
        h = hn;
        f = fn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  throw FitError("kappa fit: Newton iteration did not converge");
}

}  // namespace regflood
