#include "whittlefit/simulate.hpp"

#include "whittlefit/fft.hpp"
#include "whittlefit/rng.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace wf {

namespace {

ArrayXd embedding_eigenvalues(const CovarianceModel& model, const VectorXd& theta,
                              const GridSpec& grid, const std::vector<int>& mdims) {
  const int d = grid.dim();
  std::int64_t msize = 1;
  for (int v : mdims) msize *= v;
  const CovFn cov = model.bind_cov(theta);
  std::vector<std::complex<double>> buf(msize);
  std::vector<double> u(d);
  for (std::int64_t i = 0; i < msize; ++i) {
    std::int64_t rem = i;
    for (int a = 0; a < d; ++a) {
      int j = static_cast<int>(rem % mdims[a]);
      rem /= mdims[a];
      if (j > mdims[a] / 2) j -= mdims[a];  // torus distance
      u[a] = static_cast<double>(j);
    }
    buf[i] = cov(u);
  }
  fft::forward(mdims, buf.data(), buf.data());
  ArrayXd eig(msize);
  for (std::int64_t i = 0; i < msize; ++i) eig[i] = buf[i].real();
  return eig;
}

}  // namespace

int next_fft_friendly(int n) {
  for (int candidate = n;; ++candidate) {
    int r = candidate;
    for (int f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return candidate;
  }
}

EmbeddingPlan plan_embedding(const CovarianceModel& model, const VectorXd& theta,
                             const GridSpec& grid, bool allow_approx) {
  model.validate_theta(theta);
  EmbeddingPlan plan{grid, {}, {}, 0, 0.0, 0};
  std::vector<int> mdims(grid.dim());
  for (int i = 0; i < grid.dim(); ++i)
    mdims[i] = next_fft_friendly(2 * grid.dims()[i]);

  for (int attempt = 0;; ++attempt) {
    ArrayXd eig = embedding_eigenvalues(model, theta, grid, mdims);
    const double max_eig = eig.maxCoeff();
    const double min_eig = eig.minCoeff();
    if (min_eig >= -1e-6 * max_eig) {
      plan.embed_dims = mdims;
      plan.doublings = attempt;
      plan.clamp_magnitude = std::min(min_eig, 0.0);
      for (std::int64_t i = 0; i < eig.size(); ++i)
        if (eig[i] < 0.0) {
          eig[i] = 0.0;
          ++plan.clamp_count;
        }
      plan.eigenvalues = std::move(eig);
      return plan;
    }
    if (attempt < 2) {
      for (int& m : mdims) m = next_fft_friendly(2 * m);
      continue;
    }
    if (!allow_approx)
      throw std::runtime_error(
          "plan_embedding: embedding is not positive semidefinite after two "
          "doublings (most negative eigenvalue " + std::to_string(min_eig) +
          "); pass allow_approx to clamp");
    plan.embed_dims = mdims;
    plan.doublings = attempt;
    plan.clamp_magnitude = min_eig;
    for (std::int64_t i = 0; i < eig.size(); ++i)
      if (eig[i] < 0.0) {
        eig[i] = 0.0;
        ++plan.clamp_count;
      }
    plan.eigenvalues = std::move(eig);
    return plan;
  }
}

std::pair<RealField, RealField> simulate_pair(const EmbeddingPlan& plan,
                                              std::uint64_t seed,
                                              std::uint64_t replicate) {
  const GridSpec& grid = plan.base;
  const int d = grid.dim();
  const std::int64_t msize = plan.eigenvalues.size();

  PhiloxStream rng(seed, replicate);
  std::vector<std::complex<double>> buf(msize);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(msize));
  for (std::int64_t i = 0; i < msize; ++i) {
    const double amp = std::sqrt(plan.eigenvalues[i]) * inv_sqrt_m;
    // complex standard normal: E eps conj(eps) = 1, E eps^2 = 0
    const double re = rng.next_gaussian() * 0.7071067811865475244;
    const double im = rng.next_gaussian() * 0.7071067811865475244;
    buf[i] = std::complex<double>(amp * re, amp * im);
  }
  fft::backward(plan.embed_dims, buf.data(), buf.data());

  // restrict the torus field to the base grid; real and imaginary parts are
  // independent N(0, C) fields after the sqrt(2) rescale
  ArrayXd x1(grid.total_points()), x2(grid.total_points());
  std::vector<int> site(d);
  const double sqrt2 = std::sqrt(2.0);
  for (std::int64_t s = 0; s < grid.total_points(); ++s) {
    grid.site_of(s, site);
    std::int64_t idx = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      idx += stride * site[a];
      stride *= plan.embed_dims[a];
    }
    x1[s] = sqrt2 * buf[idx].real();
    x2[s] = sqrt2 * buf[idx].imag();
  }
  return {RealField(grid, std::move(x1)), RealField(grid, std::move(x2))};
}

RealField simulate_field(const CovarianceModel& model, const VectorXd& theta,
                         const GridSpec& grid, std::uint64_t seed, bool allow_approx) {
  const EmbeddingPlan plan = plan_embedding(model, theta, grid, allow_approx);
  return simulate_pair(plan, seed, 0).first;
}

Modulation circle_mask(const GridSpec& grid, double diameter) {
  const int d = grid.dim();
  ArrayXd g(grid.total_points());
  std::vector<int> site(d);
  const double radius2 = 0.25 * diameter * diameter;
  for (std::int64_t s = 0; s < grid.total_points(); ++s) {
    grid.site_of(s, site);
    double dist2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double delta = site[i] - 0.5 * (grid.dims()[i] - 1);
      dist2 += delta * delta;
    }
    g[s] = (dist2 <= radius2) ? 1.0 : 0.0;
  }
  return Modulation(grid, std::move(g));
}

Modulation bernoulli_mask(const GridSpec& grid, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("bernoulli_mask: p must lie in (0, 1]");
  ArrayXd g(grid.total_points());
  PhiloxStream rng(seed, 0x4d41534bu);
  for (std::int64_t s = 0; s < grid.total_points(); ++s)
    g[s] = (rng.next_double() <= p) ? 1.0 : 0.0;
  return Modulation(grid, std::move(g));
}

}  // namespace wf
