#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wf {

using Eigen::VectorXd;

// Named parameters with box bounds and a free/fixed mask. The public sigma
// parameter is the standard deviation; covariance formulas use sigma^2.
struct ParameterVector {
  std::vector<std::string> names;
  VectorXd values;
  VectorXd lower;
  VectorXd upper;
  std::vector<char> free;  // 1 = estimated, 0 = held fixed

  int size() const { return static_cast<int>(values.size()); }
  std::vector<int> free_indices() const;
  int n_free() const { return static_cast<int>(free_indices().size()); }
  void validate() const;  // bounds ordering, values within bounds
  int index_of(const std::string& name) const;  // -1 if absent
};

using CovFn = std::function<double(std::span<const double>)>;
using CovGradFn = std::function<void(std::span<const double>, std::span<double>)>;

// A parametric covariance family c_X(u; theta) with gradient and (where it
// exists in closed form) the spectral density of the continuum process.
class CovarianceModel {
 public:
  virtual ~CovarianceModel() = default;

  virtual std::string id() const = 0;
  virtual int spatial_dim() const { return 0; }  // 0 = any dimension
  virtual int n_params() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual ParameterVector default_parameters() const = 0;
  virtual void validate_theta(const VectorXd& theta) const;

  virtual double cov(std::span<const double> lag, const VectorXd& theta) const = 0;

  // d c_X / d theta_j for all parameters. Analytic where available, central
  // finite differences with step 1e-6 (1 + |theta_j|) otherwise (one-sided
  // when crossing zero for positive parameters).
  virtual void cov_grad(std::span<const double> lag, const VectorXd& theta,
                        std::span<double> out) const;

  virtual bool has_spectral_density() const { return false; }
  virtual double spectral_density(std::span<const double> omega,
                                  const VectorXd& theta) const;

  // sum over shifts ||q||_inf <= K of f(omega + 2 pi q). K < 0 selects the
  // adaptive rule: grow K until the last shell contributes < 1e-8 relative,
  // capped at K = 20. Lattice models (white noise) override directly.
  virtual double aliased_spectral_density(std::span<const double> omega,
                                          const VectorXd& theta, int K,
                                          int spatial_dim) const;

  // Evaluators with theta-derived constants hoisted, for lag-box sweeps.
  virtual CovFn bind_cov(const VectorXd& theta) const;
  virtual CovGradFn bind_cov_grad(const VectorXd& theta) const;
};

using ModelPtr = std::shared_ptr<const CovarianceModel>;

// Registered ids: "matern" (sigma, nu, rho), "exponential" (sigma, rho),
// "separable_exponential" (sigma, rho1, rho2; d = 2), "white_noise" (sigma).
ModelPtr make_model(const std::string& id);
std::vector<std::string> model_ids();

// Free-function forms of the model operations.
double matern_cov(std::span<const double> lag, double sigma, double nu, double rho);
double exponential_cov(std::span<const double> lag, double sigma, double rho);
double separable_exponential_cov(std::span<const double> lag, double sigma,
                                 double rho1, double rho2);
double matern_spectral_density(std::span<const double> omega, double sigma,
                               double nu, double rho);

// Gradient of model.cov in theta; wraps model.cov_grad and flags when theta
// sits on a bound of `bounds` (one-sided differencing territory).
VectorXd cov_gradient(const CovarianceModel& model, std::span<const double> lag,
                      const VectorXd& theta, bool* at_bound_warning = nullptr,
                      const ParameterVector* bounds = nullptr);

}  // namespace wf
