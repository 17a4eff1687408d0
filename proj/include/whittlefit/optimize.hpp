#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>

namespace wf {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free Nelder-Mead with deterministic jittered restarts.
MinimizeResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                           int max_iters, double rel_tol, int restarts,
                           std::uint64_t seed, double initial_step = 0.2);

// Steepest descent with Armijo backtracking line search.
MinimizeResult gradient_descent(const ObjectiveFn& f, const GradientFn& grad,
                                const Eigen::VectorXd& x0, int max_iters,
                                double rel_tol);

}  // namespace wf
