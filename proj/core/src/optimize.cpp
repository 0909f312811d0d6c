#include "optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

namespace regflood::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); }

}  // namespace

MinimizeResult bfgs_minimize(const Objective& f, Eigen::VectorXd x0,
                             double grad_tol, int max_iter) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  Eigen::VectorXd g(n);
  res.value = f(res.x, &g);
  if (!std::isfinite(res.value)) return res;

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g_new(n);
  int stalled = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter;
    res.grad_norm = inf_norm(g);
    if (res.grad_norm < grad_tol) {
      res.converged = true;
      return res;
    }
    Eigen::VectorXd dir = -h_inv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    double f_new = kInf;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      x_new = res.x + step * dir;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    // At the rounding floor the line search keeps accepting steps that do not
    // change f; leave the last digits to the caller's Newton polish.
    stalled = (res.value - f_new <= 1e-15 * std::max(1.0, std::abs(res.value))) ? stalled + 1 : 0;
    if (stalled >= 5) break;
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (iter == 0) h_inv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      h_inv = (eye - rho * s * y.transpose()) * h_inv *
                  (eye - rho * y * s.transpose()) +
              rho * s * s.transpose();
    }
    res.x = x_new;
    res.value = f_new;
    g = g_new;
  }
  res.grad_norm = inf_norm(g);
  res.converged = res.grad_norm < grad_tol;
  return res;
}

MinimizeResult newton_polish(const Objective& f, const HessianFn& hessian,
                             Eigen::VectorXd x0, double grad_tol, int max_iter) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  Eigen::VectorXd g(n), g_new(n);
  res.value = f(res.x, &g);
  if (!std::isfinite(res.value)) return res;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter;
    res.grad_norm = inf_norm(g);
    if (res.grad_norm < grad_tol) {
      res.converged = true;
      return res;
    }
    const Eigen::MatrixXd h = hessian(res.x);
    Eigen::VectorXd dir;
    const Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (h.allFinite() && llt.info() == Eigen::Success) {
      dir = -llt.solve(g);
    } else {
      dir = -g;
    }
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = kInf;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      x_new = res.x + step * dir;
      f_new = f(x_new, &g_new);
      // Near the optimum f is flat to rounding; accept any step that lowers
      // the gradient without raising f beyond rounding.
      const double slack = 1e-13 * std::max(1.0, std::abs(res.value));
      if (std::isfinite(f_new) &&
          (f_new < res.value ||
           (f_new <= res.value + slack && inf_norm(g_new) < res.grad_norm))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    res.x = x_new;
    res.value = f_new;
    g = g_new;
  }
  res.grad_norm = inf_norm(g);
  res.converged = res.grad_norm < grad_tol;
  return res;
}

ScalarMin brent_minimize(const std::function<double(double)>& f, double lo,
                         double hi) {
  const auto [x, value] =
      boost::math::tools::brent_find_minima(f, lo, hi, 40);
  return {x, value};
}

}  // namespace regflood::detail
