#include "whittlefit/models.hpp"

#include "whittlefit/bessel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wf {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return std::sqrt(s);
}

ParameterVector make_params(std::vector<std::string> names, std::vector<double> values) {
  ParameterVector p;
  const int n = static_cast<int>(names.size());
  p.names = std::move(names);
  p.values = Eigen::Map<const VectorXd>(values.data(), n);
  p.lower = VectorXd::Zero(n);
  p.upper = VectorXd::Constant(n, kInf);
  p.free.assign(n, 1);
  return p;
}

}  // namespace

std::vector<int> ParameterVector::free_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < size(); ++i)
    if (free[i]) idx.push_back(i);
  return idx;
}

void ParameterVector::validate() const {
  if (values.size() != lower.size() || values.size() != upper.size() ||
      static_cast<int>(free.size()) != size() ||
      static_cast<int>(names.size()) != size())
    throw std::invalid_argument("ParameterVector: inconsistent field sizes");
  for (int i = 0; i < size(); ++i) {
    if (!(lower[i] <= values[i] && values[i] <= upper[i]))
      throw std::invalid_argument("ParameterVector: value for '" + names[i] +
                                  "' outside [lower, upper]");
  }
}

int ParameterVector::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names[i] == name) return i;
  return -1;
}

void CovarianceModel::validate_theta(const VectorXd& theta) const {
  if (theta.size() != n_params())
    throw std::invalid_argument(id() + ": expected " + std::to_string(n_params()) +
                                " parameters");
  for (int i = 0; i < theta.size(); ++i)
    if (!(theta[i] > 0.0))
      throw std::domain_error(id() + ": parameter '" + param_names()[i] +
                              "' must be positive");
}

void CovarianceModel::cov_grad(std::span<const double> lag, const VectorXd& theta,
                               std::span<double> out) const {
  // default: analytic in sigma (parameter 0, covariance proportional to
  // sigma^2), central finite differences elsewhere
  const double c = cov(lag, theta);
  out[0] = 2.0 * c / theta[0];
  VectorXd t = theta;
  for (int j = 1; j < theta.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(theta[j]));
    if (theta[j] - h > 0.0) {
      t[j] = theta[j] + h;
      const double cp = cov(lag, t);
      t[j] = theta[j] - h;
      const double cm = cov(lag, t);
      out[j] = (cp - cm) / (2.0 * h);
    } else {
      t[j] = theta[j] + h;
      const double cp = cov(lag, t);
      out[j] = (cp - c) / h;
    }
    t[j] = theta[j];
  }
}

double CovarianceModel::spectral_density(std::span<const double>, const VectorXd&) const {
  throw std::runtime_error(id() + ": baseline requires closed-form density");
}

double CovarianceModel::aliased_spectral_density(std::span<const double> omega,
                                                 const VectorXd& theta, int K,
                                                 int spatial_dim) const {
  if (!has_spectral_density())
    throw std::runtime_error(id() + ": baseline requires closed-form density");
  const int d = spatial_dim;
  // fold omega into (-pi, pi] so the truncated sum is exactly 2pi-periodic
  // and the shells converge from the centred representative
  std::vector<double> base(omega.begin(), omega.end());
  for (double& x : base) {
    x = std::fmod(x, kTwoPi);
    if (x > kPi) x -= kTwoPi;
    if (x <= -kPi) x += kTwoPi;
  }
  std::vector<double> w(d);
  std::vector<int> q(d, 0);
  const bool adaptive = K < 0;
  const int kmax = adaptive ? 20 : K;
  double total = 0.0;
  for (int shell = 0; shell <= kmax; ++shell) {
    // sum over shifts with ||q||_inf == shell
    double shell_sum = 0.0;
    std::vector<int> box(d, 0);
    const int side = 2 * shell + 1;
    std::int64_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= side;
    for (std::int64_t c = 0; c < cells; ++c) {
      std::int64_t rem = c;
      int linf = 0;
      for (int i = 0; i < d; ++i) {
        q[i] = static_cast<int>(rem % side) - shell;
        rem /= side;
        linf = std::max(linf, std::abs(q[i]));
      }
      if (linf != shell) continue;
      for (int i = 0; i < d; ++i) w[i] = base[i] + kTwoPi * q[i];
      shell_sum += spectral_density(w, theta);
    }
    total += shell_sum;
    if (adaptive && shell > 0 && shell_sum < 1e-8 * total) break;
  }
  return total;
}

CovFn CovarianceModel::bind_cov(const VectorXd& theta) const {
  validate_theta(theta);
  VectorXd t = theta;
  return [this, t](std::span<const double> u) { return cov(u, t); };
}

CovGradFn CovarianceModel::bind_cov_grad(const VectorXd& theta) const {
  validate_theta(theta);
  VectorXd t = theta;
  return [this, t](std::span<const double> u, std::span<double> out) {
    cov_grad(u, t, out);
  };
}

// ---------------------------------------------------------------------------

double matern_cov(std::span<const double> lag, double sigma, double nu, double rho) {
  if (!(sigma > 0.0 && nu > 0.0 && rho > 0.0))
    throw std::domain_error("matern_cov: parameters must be positive");
  const double s2 = sigma * sigma;
  const double r = norm2(lag);
  if (r == 0.0) return s2;
  const double x = std::sqrt(2.0 * nu) * r / rho;
  // closed forms at half-integer smoothness
  if (std::abs(nu - 0.5) < 1e-12) return s2 * std::exp(-x);
  if (std::abs(nu - 1.5) < 1e-12) return s2 * (1.0 + x) * std::exp(-x);
  if (std::abs(nu - 2.5) < 1e-12)
    return s2 * (1.0 + x + x * x / 3.0) * std::exp(-x);
  const double lg = std::lgamma(nu);
  const double log_pref = (1.0 - nu) * std::log(2.0) - lg + nu * std::log(x);
  double k;
  try {
    k = bessel_k(nu, x);
  } catch (const std::range_error&) {
    return 0.0;  // K_nu underflowed: covariance is numerically zero
  }
  return s2 * std::exp(log_pref) * k;
}

double exponential_cov(std::span<const double> lag, double sigma, double rho) {
  if (!(sigma > 0.0 && rho > 0.0))
    throw std::domain_error("exponential_cov: parameters must be positive");
  return sigma * sigma * std::exp(-norm2(lag) / rho);
}

double separable_exponential_cov(std::span<const double> lag, double sigma,
                                 double rho1, double rho2) {
  if (lag.size() != 2)
    throw std::invalid_argument("separable_exponential_cov: requires d = 2");
  if (!(sigma > 0.0 && rho1 > 0.0 && rho2 > 0.0))
    throw std::domain_error("separable_exponential_cov: parameters must be positive");
  return sigma * sigma * std::exp(-std::abs(lag[0]) / rho1) *
         std::exp(-std::abs(lag[1]) / rho2);
}

double matern_spectral_density(std::span<const double> omega, double sigma,
                               double nu, double rho) {
  if (!(sigma > 0.0 && nu > 0.0 && rho > 0.0))
    throw std::domain_error("matern_spectral_density: parameters must be positive");
  const int d = static_cast<int>(omega.size());
  const double alpha2 = 2.0 * nu / (rho * rho);
  double w2 = 0.0;
  for (double w : omega) w2 += w * w;
  // normalized so that the R^d integral of f against e^{i w.u} returns the
  // covariance (validated against the covariance by quadrature in tests)
  const double log_pref = std::lgamma(nu + 0.5 * d) - std::lgamma(nu) +
                          nu * std::log(alpha2) - 0.5 * d * std::log(kPi);
  return sigma * sigma * std::exp(log_pref) *
         std::pow(alpha2 + w2, -(nu + 0.5 * d));
}

// ---------------------------------------------------------------------------

namespace {

class MaternModel final : public CovarianceModel {
 public:
  std::string id() const override { return "matern"; }
  int n_params() const override { return 3; }
  std::vector<std::string> param_names() const override { return {"sigma", "nu", "rho"}; }
  ParameterVector default_parameters() const override {
    auto p = make_params({"sigma", "nu", "rho"}, {1.0, 1.0, 1.0});
    p.lower << 1e-6, 1e-3, 1e-3;
    p.upper << 1e6, 20.0, 1e6;
    return p;
  }
  double cov(std::span<const double> u, const VectorXd& t) const override {
    return matern_cov(u, t[0], t[1], t[2]);
  }
  bool has_spectral_density() const override { return true; }
  double spectral_density(std::span<const double> w, const VectorXd& t) const override {
    return matern_spectral_density(w, t[0], t[1], t[2]);
  }
  CovFn bind_cov(const VectorXd& theta) const override {
    validate_theta(theta);
    const double s2 = theta[0] * theta[0];
    const double nu = theta[1];
    const double scale = std::sqrt(2.0 * nu) / theta[2];
    if (std::abs(nu - 0.5) < 1e-12)
      return [s2, scale](std::span<const double> u) {
        return s2 * std::exp(-scale * norm2(u));
      };
    if (std::abs(nu - 1.5) < 1e-12)
      return [s2, scale](std::span<const double> u) {
        const double x = scale * norm2(u);
        return s2 * (1.0 + x) * std::exp(-x);
      };
    if (std::abs(nu - 2.5) < 1e-12)
      return [s2, scale](std::span<const double> u) {
        const double x = scale * norm2(u);
        return s2 * (1.0 + x + x * x / 3.0) * std::exp(-x);
      };
    const double log_pref = (1.0 - nu) * std::log(2.0) - std::lgamma(nu);
    return [s2, scale, nu, log_pref](std::span<const double> u) {
      const double x = scale * norm2(u);
      if (x == 0.0) return s2;
      double k;
      try {
        k = bessel_k(nu, x);
      } catch (const std::range_error&) {
        return 0.0;
      }
      return s2 * std::exp(log_pref + nu * std::log(x)) * k;
    };
  }
};

class ExponentialModel final : public CovarianceModel {
 public:
  std::string id() const override { return "exponential"; }
  int n_params() const override { return 2; }
  std::vector<std::string> param_names() const override { return {"sigma", "rho"}; }
  ParameterVector default_parameters() const override {
    auto p = make_params({"sigma", "rho"}, {1.0, 1.0});
    p.lower << 1e-6, 1e-3;
    p.upper << 1e6, 1e6;
    return p;
  }
  double cov(std::span<const double> u, const VectorXd& t) const override {
    return exponential_cov(u, t[0], t[1]);
  }
  void cov_grad(std::span<const double> u, const VectorXd& t,
                std::span<double> out) const override {
    const double r = norm2(u);
    const double c = t[0] * t[0] * std::exp(-r / t[1]);
    out[0] = 2.0 * c / t[0];
    out[1] = c * r / (t[1] * t[1]);
  }
  bool has_spectral_density() const override { return true; }
  double spectral_density(std::span<const double> w, const VectorXd& t) const override {
    return matern_spectral_density(w, t[0], 0.5, t[1]);
  }
  CovFn bind_cov(const VectorXd& theta) const override {
    validate_theta(theta);
    const double s2 = theta[0] * theta[0];
    const double inv_rho = 1.0 / theta[1];
    return [s2, inv_rho](std::span<const double> u) {
      return s2 * std::exp(-inv_rho * norm2(u));
    };
  }
};

class SeparableExponentialModel final : public CovarianceModel {
 public:
  std::string id() const override { return "separable_exponential"; }
  int spatial_dim() const override { return 2; }
  int n_params() const override { return 3; }
  std::vector<std::string> param_names() const override {
    return {"sigma", "rho1", "rho2"};
  }
  ParameterVector default_parameters() const override {
    auto p = make_params({"sigma", "rho1", "rho2"}, {1.0, 1.0, 1.0});
    p.lower << 1e-6, 1e-3, 1e-3;
    p.upper << 1e6, 1e6, 1e6;
    return p;
  }
  double cov(std::span<const double> u, const VectorXd& t) const override {
    return separable_exponential_cov(u, t[0], t[1], t[2]);
  }
  void cov_grad(std::span<const double> u, const VectorXd& t,
                std::span<double> out) const override {
    const double c = cov(u, t);
    out[0] = 2.0 * c / t[0];
    out[1] = c * std::abs(u[0]) / (t[1] * t[1]);
    out[2] = c * std::abs(u[1]) / (t[2] * t[2]);
  }
  bool has_spectral_density() const override { return true; }
  double spectral_density(std::span<const double> w, const VectorXd& t) const override {
    if (w.size() != 2)
      throw std::invalid_argument("separable_exponential: requires d = 2");
    // product of 1-D exponential (Cauchy) densities
    const double f1 = (t[1] / kPi) / (1.0 + t[1] * t[1] * w[0] * w[0]);
    const double f2 = (t[2] / kPi) / (1.0 + t[2] * t[2] * w[1] * w[1]);
    return t[0] * t[0] * f1 * f2;
  }
};

class WhiteNoiseModel final : public CovarianceModel {
 public:
  std::string id() const override { return "white_noise"; }
  int n_params() const override { return 1; }
  std::vector<std::string> param_names() const override { return {"sigma"}; }
  ParameterVector default_parameters() const override {
    auto p = make_params({"sigma"}, {1.0});
    p.lower << 1e-6;
    p.upper << 1e6;
    return p;
  }
  double cov(std::span<const double> u, const VectorXd& t) const override {
    validate_theta(t);
    for (double v : u)
      if (std::abs(v) > 0.5) return 0.0;
    return t[0] * t[0];
  }
  void cov_grad(std::span<const double> u, const VectorXd& t,
                std::span<double> out) const override {
    out[0] = 2.0 * cov(u, t) / t[0];
  }
  // lattice process: the folded density is flat, there is no continuum one
  double aliased_spectral_density(std::span<const double>, const VectorXd& t, int,
                                  int spatial_dim) const override {
    return t[0] * t[0] * std::pow(kTwoPi, -spatial_dim);
  }
};

}  // namespace

ModelPtr make_model(const std::string& id) {
  if (id == "matern") return std::make_shared<MaternModel>();
  if (id == "exponential") return std::make_shared<ExponentialModel>();
  if (id == "separable_exponential") return std::make_shared<SeparableExponentialModel>();
  if (id == "white_noise") return std::make_shared<WhiteNoiseModel>();
  throw std::invalid_argument("unknown model id '" + id + "'");
}

std::vector<std::string> model_ids() {
  return {"matern", "exponential", "separable_exponential", "white_noise"};
}

VectorXd cov_gradient(const CovarianceModel& model, std::span<const double> lag,
                      const VectorXd& theta, bool* at_bound_warning,
                      const ParameterVector* bounds) {
  VectorXd g(theta.size());
  model.cov_grad(lag, theta, std::span<double>(g.data(), g.size()));
  if (at_bound_warning && bounds) {
    for (int j = 0; j < theta.size(); ++j) {
      const double h = 1e-6 * (1.0 + std::abs(theta[j]));
      if (theta[j] - bounds->lower[j] < h || bounds->upper[j] - theta[j] < h)
        *at_bound_warning = true;
    }
  }
  return g;
}

}  // namespace wf
