#pragma once

#include <functional>

#include <Eigen/Dense>

namespace regflood::detail {

// Objective returning f(x) and, when `grad` is non-null, its gradient.
// Infeasible points return +inf.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;
using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// BFGS with a backtracking Armijo line search.
MinimizeResult bfgs_minimize(const Objective& f, Eigen::VectorXd x0,
                             double grad_tol, int max_iter = 500);

// Damped Newton refinement; falls back to steepest descent when the Hessian
// is not positive definite.
MinimizeResult newton_polish(const Objective& f, const HessianFn& hessian,
                             Eigen::VectorXd x0, double grad_tol,
                             int max_iter = 60);

// Minimum of a scalar function on [lo, hi] (Brent).
struct ScalarMin {
  double x = 0.0;
  double value = 0.0;
};
ScalarMin brent_minimize(const std::function<double(double)>& f, double lo,
                         double hi);

}  // namespace regflood::detail
