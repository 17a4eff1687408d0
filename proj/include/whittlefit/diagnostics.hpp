#pragma once

#include "whittlefit/grid.hpp"
#include "whittlefit/models.hpp"

#include <optional>
#include <span>

namespace wf {

// Finite-sample checks of the sampling-pattern conditions behind consistency
// (SCC) and the convergence rate (HSCC). Advisory: fitting never refuses to
// run, it annotates.
struct SccReport {
  double info_ratio = 0.0;  // sum_u c_g(u) c_X(u)^2 / sum g^2 == r_k^2
  double rate_rk = 0.0;
  std::optional<double> separation;  // S(theta1, theta2) when a pair was given
  double hscc_min_eig = 0.0;
  double hscc_trace = 0.0;
  int n_free = 0;
  bool identifiability_warning = false;
};

double scc_info_ratio(const Modulation& mod, const CovarianceModel& model,
                      const VectorXd& theta);

// S(theta1, theta2) = sum_u c_g(u)^2 {c_X(u;theta1) - c_X(u;theta2)}^2.
double scc_separation(const Modulation& mod, const CovarianceModel& model,
                      const VectorXd& theta1, const VectorXd& theta2);

// Minimum eigenvalue of A = sum_u c_g(u)^2 grad c_X(u) grad c_X(u)^T over the
// requested parameters; trace written to trace_out when given.
double hscc_min_eigen(const Modulation& mod, const CovarianceModel& model,
                      const VectorXd& theta, std::span<const int> param_indices,
                      double* trace_out = nullptr);

SccReport scc_report(const Modulation& mod, const CovarianceModel& model,
                     const VectorXd& theta, std::span<const int> param_indices,
                     const VectorXd* theta2 = nullptr);

}  // namespace wf
