#pragma once

#include "whittlefit/likelihood.hpp"

#include <Eigen/Dense>

#include <optional>

namespace wf {

using Eigen::MatrixXd;

enum class OptimizerKind { nelder_mead, gradient_descent_with_line_search };

struct FitOptions {
  OptimizerKind optimizer = OptimizerKind::nelder_mead;
  int max_iters = 1000;
  double rel_tol = 1e-8;
  // log-transform positive-bounded parameters for the search; off switches to
  // the identity transform (bounds enforced by penalty either way)
  bool log_transform = true;
  int restarts = 2;
  std::uint64_t seed = 0;
  bool compute_sandwich = true;
  int sandwich_samples = 1000;
  double ci_level = 0.95;
};

struct FitResult {
  ParameterVector theta_hat;
  double nll = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<MatrixXd> sandwich_cov;  // free parameters only
  std::vector<std::pair<double, double>> ci;  // per free parameter
  double rate_rk = 0.0;
  double hscc_min_eig = 0.0;
  double hscc_trace = 0.0;
  bool identifiability_warning = false;
  bool at_bound_warning = false;
};

struct ScoreCovariance {
  MatrixXd cov;    // var{grad l(theta)} over the free parameters
  MatrixXd mc_se;  // Monte-Carlo standard error of each entry
};

// Minimizes the objective over the free parameters of theta0 in transformed
// coordinates. The objective carries the (effective) modulation.
// Deterministic given seed and inputs.
FitResult fit(const RealField& data, const Objective& objective,
              const ParameterVector& theta0, const FitOptions& options = {});

// H = |n|^-1 sum_w Ibar^-2 grad Ibar grad Ibar^T at theta, over param_indices.
MatrixXd expected_hessian(const CovarianceModel& model, const VectorXd& theta,
                          const Modulation& mod, std::span<const int> param_indices,
                          bool exclude_zero_frequency = false);

// var{grad l}: exact diagonal (w1 == w2) terms from the
// Isserlis formula, off-diagonal terms estimated from M uniformly sampled
// ordered pairs (enumerated exhaustively when M covers all pairs). Near-
// diagonal pairs are summed exactly when the modulation carries a taper.
ScoreCovariance score_covariance_mc(const CovarianceModel& model, const VectorXd& theta,
                                    const Modulation& mod,
                                    std::span<const int> param_indices, int M,
                                    std::uint64_t seed,
                                    bool exclude_zero_frequency = false);

// H^-1 V H^-1, symmetrized; throws on a near-singular H.
MatrixXd sandwich_variance(const MatrixXd& hessian, const MatrixXd& score_cov);

// Method-of-moments starting point: sigma from the weighted sample variance,
// rho from the lag where the empirical correlation drops below 1/e, nu = 1.
ParameterVector default_initializer(const RealField& data, const Modulation& mod,
                                    const CovarianceModel& model);

double normal_quantile(double p);

}  // namespace wf
