// Independent brute-force oracles used by the tests. Everything here is
// O(|n|^2) or quadrature-based on purpose and never shares code with the
// FFT implementation paths it checks.
#pragma once

#include "whittlefit/grid.hpp"
#include "whittlefit/models.hpp"
#include "whittlefit/rng.hpp"
#include "whittlefit/spectral.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using wf::ArrayXd;
using wf::GridSpec;
using wf::Modulation;

// c_g(u) by direct pair counting.
inline double mask_autocorr(const Modulation& mod, std::span<const int> lag) {
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  std::vector<int> site(d), shifted(d);
  double num = 0.0;
  for (std::int64_t s = 0; s < grid.total_points(); ++s) {
    grid.site_of(s, site);
    bool inside = true;
    for (int i = 0; i < d; ++i) {
      shifted[i] = site[i] + lag[i];
      if (shifted[i] < 0 || shifted[i] >= grid.dims()[i]) inside = false;
    }
    if (!inside) continue;
    num += mod.values()[s] * mod.values()[grid.index_of(shifted)];
  }
  return num / mod.sum_g2();
}

// E I(w) by the O(|n|^2) double sum over site pairs.
inline double expected_periodogram(const Modulation& mod, const wf::CovFn& cov,
                                   std::span<const double> omega) {
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  std::vector<int> s1(d), s2(d);
  std::vector<double> u(d);
  std::complex<double> acc(0.0, 0.0);
  for (std::int64_t a = 0; a < grid.total_points(); ++a) {
    const double ga = mod.values()[a];
    if (ga == 0.0) continue;
    grid.site_of(a, s1);
    for (std::int64_t b = 0; b < grid.total_points(); ++b) {
      const double gb = mod.values()[b];
      if (gb == 0.0) continue;
      grid.site_of(b, s2);
      double phase = 0.0;
      for (int i = 0; i < d; ++i) {
        u[i] = static_cast<double>(s1[i] - s2[i]);
        phase -= omega[i] * u[i];
      }
      acc += ga * gb * cov(u) * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  }
  return std::pow(2.0 * M_PI, -d) * acc.real() / mod.sum_g2();
}

// sum_u c_g(u) c(u)^2 / sum g^2 over the full lag box, by pair counting.
inline double scc_info_ratio(const Modulation& mod, const wf::CovFn& cov) {
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  std::vector<int> lag(d);
  std::vector<double> u(d);
  std::int64_t boxsize = 1;
  for (int i = 0; i < d; ++i) boxsize *= 2 * grid.dims()[i] - 1;
  double acc = 0.0;
  for (std::int64_t l = 0; l < boxsize; ++l) {
    std::int64_t rem = l;
    for (int i = 0; i < d; ++i) {
      const int span = 2 * grid.dims()[i] - 1;
      lag[i] = static_cast<int>(rem % span) - (grid.dims()[i] - 1);
      rem /= span;
      u[i] = static_cast<double>(lag[i]);
    }
    const double cg = mask_autocorr(mod, lag);
    const double c = cov(u);
    acc += cg * c * c;
  }
  return acc / mod.sum_g2();
}

inline double scc_separation(const Modulation& mod, const wf::CovFn& cov1,
                             const wf::CovFn& cov2) {
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  std::vector<int> lag(d);
  std::vector<double> u(d);
  std::int64_t boxsize = 1;
  for (int i = 0; i < d; ++i) boxsize *= 2 * grid.dims()[i] - 1;
  double acc = 0.0;
  for (std::int64_t l = 0; l < boxsize; ++l) {
    std::int64_t rem = l;
    for (int i = 0; i < d; ++i) {
      const int span = 2 * grid.dims()[i] - 1;
      lag[i] = static_cast<int>(rem % span) - (grid.dims()[i] - 1);
      rem /= span;
      u[i] = static_cast<double>(lag[i]);
    }
    const double cg = mask_autocorr(mod, lag);
    const double diff = cov1(u) - cov2(u);
    acc += cg * cg * diff * diff;
  }
  return acc;
}

// K_nu(x) = int_0^inf e^{-x cosh t} cosh(nu t) dt, trapezoid with step
// halving until stable. Independent of the Temme/CF implementation.
inline double bessel_k_quadrature(double nu, double x) {
  // locate the peak first (it sits near asinh(nu/x) for small x), then pick
  // the upper limit where the integrand is negligible relative to it
  auto log_integrand = [&](double t) { return -x * std::cosh(t) + std::log(std::cosh(nu * t)); };
  double peak = log_integrand(0.0);
  double t_peak = 0.0;
  for (double t = 0.0; t < 80.0; t += 0.25) {
    const double v = log_integrand(t);
    if (v > peak) {
      peak = v;
      t_peak = t;
    }
  }
  double tmax = std::max(2.0, t_peak + 1.0);
  while (tmax < 400.0 && log_integrand(tmax) > peak - 60.0) tmax += 1.0;

  auto integrate = [&](int steps) {
    const double h = tmax / steps;
    double acc = 0.5 * (std::exp(log_integrand(0.0) - peak) +
                        std::exp(log_integrand(tmax) - peak));
    for (int i = 1; i < steps; ++i) acc += std::exp(log_integrand(i * h) - peak);
    return acc * h * std::exp(peak);
  };
  double prev = integrate(256);
  for (int steps = 512; steps <= 1 << 20; steps *= 2) {
    const double cur = integrate(steps);
    if (std::abs(cur - prev) <= 1e-13 * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

// deterministic random masks/grids for property tests
inline Modulation random_mask(const GridSpec& grid, double p_observe,
                              std::uint64_t seed) {
  wf::PhiloxStream rng(seed, 0x6f7261636cull);
  ArrayXd g(grid.total_points());
  for (std::int64_t i = 0; i < grid.total_points(); ++i)
    g[i] = rng.next_double() <= p_observe ? 1.0 : 0.0;
  if (g.sum() == 0.0) g[0] = 1.0;  // keep the observation set nonempty
  return Modulation(grid, std::move(g));
}

inline GridSpec random_grid(int d, std::int64_t max_points, std::uint64_t seed) {
  wf::PhiloxStream rng(seed, 0x67726964ull);
  for (;;) {
    std::vector<int> dims(d);
    std::int64_t total = 1;
    for (int i = 0; i < d; ++i) {
      dims[i] = 1 + static_cast<int>(rng.next_below(12));
      total *= dims[i];
    }
    if (total <= max_points && total >= 2) return GridSpec(dims);
  }
}

}  // namespace oracle
