#include "whittlefit/optimize.hpp"

#include "whittlefit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wf {

namespace {

using Eigen::VectorXd;

struct Simplex {
  std::vector<VectorXd> x;
  std::vector<double> f;

  void sort() {
    std::vector<int> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return f[a] < f[b]; });
    std::vector<VectorXd> xs(x.size());
    std::vector<double> fs(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      xs[i] = x[order[i]];
      fs[i] = f[order[i]];
    }
    x.swap(xs);
    f.swap(fs);
  }
};

MinimizeResult nelder_mead_once(const ObjectiveFn& fn, const VectorXd& x0,
                                const VectorXd& steps, int max_iters, double rel_tol) {
  const int p = static_cast<int>(x0.size());
  Simplex s;
  s.x.resize(p + 1);
  s.f.resize(p + 1);
  s.x[0] = x0;
  for (int i = 0; i < p; ++i) {
    s.x[i + 1] = x0;
    s.x[i + 1][i] += steps[i];
  }
  for (int i = 0; i <= p; ++i) s.f[i] = fn(s.x[i]);

  MinimizeResult res;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    s.sort();
    const double spread = std::abs(s.f[p] - s.f[0]);
    if (spread <= rel_tol * (std::abs(s.f[0]) + rel_tol)) {
      res.converged = true;
      break;
    }
    VectorXd centroid = VectorXd::Zero(p);
    for (int i = 0; i < p; ++i) centroid += s.x[i];
    centroid /= p;

    const VectorXd xr = centroid + (centroid - s.x[p]);  // reflection
    const double fr = fn(xr);
    if (fr < s.f[0]) {
      const VectorXd xe = centroid + 2.0 * (centroid - s.x[p]);  // expansion
      const double fe = fn(xe);
      if (fe < fr) {
        s.x[p] = xe;
        s.f[p] = fe;
      } else {
        s.x[p] = xr;
        s.f[p] = fr;
      }
    } else if (fr < s.f[p - 1]) {
      s.x[p] = xr;
      s.f[p] = fr;
    } else {
      // contraction (outside if the reflected point improved on the worst)
      const VectorXd base = (fr < s.f[p]) ? xr : s.x[p];
      const VectorXd xc = centroid + 0.5 * (base - centroid);
      const double fc = fn(xc);
      if (fc < std::min(fr, s.f[p])) {
        s.x[p] = xc;
        s.f[p] = fc;
      } else {
        for (int i = 1; i <= p; ++i) {  // shrink toward the best vertex
          s.x[i] = s.x[0] + 0.5 * (s.x[i] - s.x[0]);
          s.f[i] = fn(s.x[i]);
        }
      }
    }
  }
  s.sort();
  res.x = s.x[0];
  res.f = s.f[0];
  res.iterations = iter;
  return res;
}

}  // namespace

MinimizeResult nelder_mead(const ObjectiveFn& f, const VectorXd& x0, int max_iters,
                           double rel_tol, int restarts, std::uint64_t seed,
                           double initial_step) {
  const int p = static_cast<int>(x0.size());
  VectorXd steps = VectorXd::Constant(p, initial_step);
  MinimizeResult best = nelder_mead_once(f, x0, steps, max_iters, rel_tol);
  int total_iters = best.iterations;
  for (int r = 0; r < restarts; ++r) {
    PhiloxStream rng(seed, 0x52455354u + static_cast<std::uint64_t>(r));
    VectorXd start = best.x;
    VectorXd jitter(p);
    for (int i = 0; i < p; ++i) jitter[i] = initial_step * (rng.next_double() - 0.5);
    MinimizeResult again =
        nelder_mead_once(f, start + jitter, steps, max_iters, rel_tol);
    total_iters += again.iterations;
    if (again.f < best.f) best = again;
  }
  best.iterations = total_iters;
  return best;
}

MinimizeResult gradient_descent(const ObjectiveFn& f, const GradientFn& grad,
                                const VectorXd& x0, int max_iters, double rel_tol) {
  MinimizeResult res;
  VectorXd x = x0;
  double fx = f(x);
  double step = 1.0;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    const VectorXd g = grad(x);
    const double gnorm2 = g.squaredNorm();
    if (gnorm2 < 1e-20) {
      res.converged = true;
      break;
    }
    // Armijo backtracking
    bool moved = false;
    double t = step;
    for (int ls = 0; ls < 40; ++ls) {
      const VectorXd xn = x - t * g;
      const double fn = f(xn);
      if (fn <= fx - 1e-4 * t * gnorm2) {
        const double improvement = fx - fn;
        x = xn;
        fx = fn;
        step = std::min(t * 2.0, 1e6);
        moved = true;
        if (improvement <= rel_tol * (std::abs(fx) + rel_tol)) {
          res.converged = true;
          ++iter;
        }
        break;
      }
      t *= 0.5;
    }
    if (!moved || res.converged) {
      if (!moved) res.converged = true;  // no descent direction left at fp resolution
      break;
    }
  }
  res.x = x;
  res.f = fx;
  res.iterations = iter;
  return res;
}

}  // namespace wf
