#include "whittlefit/diagnostics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace wf {

namespace {

// Sweep the lag box with the cached c_g; sums are finite and exact because
// c_g vanishes outside.
template <typename Body>
void for_each_lag(const Modulation& mod, Body&& body) {
  const LagField& cg = mod.autocorrelation();
  const int d = mod.grid().dim();
  std::vector<int> lag(d);
  std::vector<double> u(d);
  for (std::int64_t i = 0; i < cg.embed_size(); ++i) {
    const double w = cg.values()[i];
    if (w == 0.0) continue;
    cg.lag_of(i, lag);
    for (int a = 0; a < d; ++a) u[a] = static_cast<double>(lag[a]);
    body(w, std::span<const double>(u));
  }
}

}  // namespace

double scc_info_ratio(const Modulation& mod, const CovarianceModel& model,
                      const VectorXd& theta) {
  const CovFn cov = model.bind_cov(theta);
  double acc = 0.0;
  for_each_lag(mod, [&](double w, std::span<const double> u) {
    const double c = cov(u);
    acc += w * c * c;
  });
  return acc / mod.sum_g2();
}

double scc_separation(const Modulation& mod, const CovarianceModel& model,
                      const VectorXd& theta1, const VectorXd& theta2) {
  const CovFn cov1 = model.bind_cov(theta1);
  const CovFn cov2 = model.bind_cov(theta2);
  double acc = 0.0;
  for_each_lag(mod, [&](double w, std::span<const double> u) {
    const double diff = cov1(u) - cov2(u);
    acc += w * w * diff * diff;
  });
  return acc;
}

double hscc_min_eigen(const Modulation& mod, const CovarianceModel& model,
                      const VectorXd& theta, std::span<const int> param_indices,
                      double* trace_out) {
  const int p = static_cast<int>(param_indices.size());
  const CovGradFn grad = model.bind_cov_grad(theta);
  std::vector<double> g(model.n_params());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for_each_lag(mod, [&](double w, std::span<const double> u) {
    grad(u, g);
    for (int r = 0; r < p; ++r)
      for (int c = r; c < p; ++c)
        a(r, c) += w * w * g[param_indices[r]] * g[param_indices[c]];
  });
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < r; ++c) a(r, c) = a(c, r);
  if (trace_out) *trace_out = a.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SccReport scc_report(const Modulation& mod, const CovarianceModel& model,
                     const VectorXd& theta, std::span<const int> param_indices,
                     const VectorXd* theta2) {
  SccReport rep;
  rep.info_ratio = scc_info_ratio(mod, model, theta);
  rep.rate_rk = std::sqrt(rep.info_ratio);
  if (theta2) rep.separation = scc_separation(mod, model, theta, *theta2);
  rep.n_free = static_cast<int>(param_indices.size());
  rep.hscc_min_eig =
      hscc_min_eigen(mod, model, theta, param_indices, &rep.hscc_trace);
  rep.identifiability_warning =
      rep.n_free > 0 &&
      rep.hscc_min_eig < 1e-8 * rep.hscc_trace / rep.n_free;
  return rep;
}

}  // namespace wf
