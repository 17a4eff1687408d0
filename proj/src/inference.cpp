#include "whittlefit/inference.hpp"

#include "whittlefit/diagnostics.hpp"
#include "whittlefit/fft.hpp"
#include "whittlefit/optimize.hpp"
#include "whittlefit/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace wf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Per-parameter search transform: log for positive-bounded parameters,
// identity otherwise; bounds enforced by penalty in either case.
struct Transform {
  std::vector<int> free_idx;
  std::vector<bool> use_log;
  VectorXd lower, upper;

  Transform(const ParameterVector& theta0, bool log_transform) {
    free_idx = theta0.free_indices();
    lower.resize(free_idx.size());
    upper.resize(free_idx.size());
    use_log.resize(free_idx.size());
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
      const int i = free_idx[j];
      lower[j] = theta0.lower[i];
      upper[j] = theta0.upper[i];
      use_log[j] = log_transform && theta0.lower[i] >= 0.0 && theta0.values[i] > 0.0;
    }
  }

  VectorXd to_search(const VectorXd& theta_free) const {
    VectorXd x = theta_free;
    for (std::size_t j = 0; j < use_log.size(); ++j)
      if (use_log[j]) x[j] = std::log(theta_free[j]);
    return x;
  }

  VectorXd from_search(const VectorXd& x) const {
    VectorXd theta = x;
    for (std::size_t j = 0; j < use_log.size(); ++j)
      if (use_log[j]) theta[j] = std::exp(x[j]);
    return theta;
  }

  double bound_penalty(const VectorXd& theta_free) const {
    double pen = 0.0;
    for (int j = 0; j < theta_free.size(); ++j) {
      if (theta_free[j] < lower[j]) pen += 1.0 + (lower[j] - theta_free[j]);
      if (theta_free[j] > upper[j]) pen += 1.0 + (theta_free[j] - upper[j]);
    }
    return pen;
  }
};

struct EmbeddingIndexer {
  std::vector<int> ndims, mdims;
  int d;

  explicit EmbeddingIndexer(const GridSpec& grid) : ndims(grid.dims()), d(grid.dim()) {
    mdims.resize(d);
    for (int i = 0; i < d; ++i) mdims[i] = 2 * ndims[i];
  }
  std::int64_t embed_total() const {
    std::int64_t t = 1;
    for (int i = 0; i < d; ++i) t *= mdims[i];
    return t;
  }
  // embedding index of the Fourier bin k of the base grid (components 2 k_i)
  std::int64_t embed_of_freq(std::int64_t k) const {
    std::int64_t idx = 0, stride = 1;
    for (int i = 0; i < d; ++i) {
      idx += stride * (2 * (k % ndims[i]));
      stride *= mdims[i];
      k /= ndims[i];
    }
    return idx;
  }
  // (a - b) mod m and (a + b) mod m, componentwise on the embedding grid
  std::int64_t sub(std::int64_t a, std::int64_t b) const {
    std::int64_t idx = 0, stride = 1;
    for (int i = 0; i < d; ++i) {
      int ai = static_cast<int>(a % mdims[i]);
      int bi = static_cast<int>(b % mdims[i]);
      int ci = ai - bi;
      if (ci < 0) ci += mdims[i];
      idx += stride * ci;
      stride *= mdims[i];
      a /= mdims[i];
      b /= mdims[i];
    }
    return idx;
  }
  std::int64_t add(std::int64_t a, std::int64_t b) const {
    std::int64_t idx = 0, stride = 1;
    for (int i = 0; i < d; ++i) {
      int ai = static_cast<int>(a % mdims[i]);
      int bi = static_cast<int>(b % mdims[i]);
      int ci = ai + bi;
      if (ci >= mdims[i]) ci -= mdims[i];
      idx += stride * ci;
      stride *= mdims[i];
      a /= mdims[i];
      b /= mdims[i];
    }
    return idx;
  }
};

// Shared state for the periodogram-covariance evaluations behind the
// sandwich standard errors: the lag-truncated density f~ and the modified Dirichlet
// kernel D, both on the Fourier grid of the 2n embedding. The lambda sum is
// taken over the support of D(lambda - w1) only: D is exactly sparse for
// full grids (zero at even nonzero bins) and dense masks lose nothing.
struct PeriodogramCovEngine {
  EmbeddingIndexer ix;
  ArrayXd ftilde;  // real: c_X is even on the lag box
  std::vector<std::complex<double>> dirichlet;
  // support of D: per-axis components and values, one entry per nonzero bin
  std::vector<std::array<int, 3>> supp_comp;
  std::vector<std::complex<double>> supp_val;
  double scale;  // (2pi)^-d / (sum g^2 * |m|)

  PeriodogramCovEngine(const CovarianceModel& model, const VectorXd& theta,
                       const Modulation& mod)
      : ix(mod.grid()) {
    const GridSpec& grid = mod.grid();
    const int d = grid.dim();
    const std::int64_t msize = ix.embed_total();

    // f~(lambda) = sum_{u in lag box} c_X(u) e^{-i lambda.u}
    const CovFn cov = model.bind_cov(theta);
    LagField clags(grid);
    {
      std::vector<int> lag(d);
      std::vector<double> u(d);
      for (std::int64_t i = 0; i < clags.embed_size(); ++i) {
        clags.lag_of(i, lag);
        bool in_box = true;
        for (int a = 0; a < d; ++a)
          if (std::abs(lag[a]) > grid.dims()[a] - 1) in_box = false;
        if (!in_box) continue;
        for (int a = 0; a < d; ++a) u[a] = static_cast<double>(lag[a]);
        clags.values()[i] = cov(u);
      }
    }
    std::vector<std::complex<double>> buf(msize);
    for (std::int64_t i = 0; i < msize; ++i) buf[i] = clags.values()[i];
    fft::forward(ix.mdims, buf.data(), buf.data());
    ftilde.resize(msize);
    for (std::int64_t i = 0; i < msize; ++i) ftilde[i] = buf[i].real();

    // D(lambda) = sum_s g_s e^{+i lambda.s} = conj(FFT_forward(g))
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    {
      std::vector<int> site(d);
      for (std::int64_t s = 0; s < grid.total_points(); ++s) {
        grid.site_of(s, site);
        std::int64_t idx = 0, stride = 1;
        for (int i = 0; i < d; ++i) {
          idx += stride * site[i];
          stride *= ix.mdims[i];
        }
        buf[idx] = mod.values()[s];
      }
      fft::forward(ix.mdims, buf.data(), buf.data());
      dirichlet.resize(msize);
      for (std::int64_t i = 0; i < msize; ++i) dirichlet[i] = std::conj(buf[i]);
    }
    const double tiny = 1e-14 * mod.sum_g();
    for (std::int64_t l = 0; l < msize; ++l) {
      if (std::abs(dirichlet[l].real()) <= tiny &&
          std::abs(dirichlet[l].imag()) <= tiny)
        continue;
      std::array<int, 3> comp{0, 0, 0};
      std::int64_t rem = l;
      for (int i = 0; i < d; ++i) {
        comp[i] = static_cast<int>(rem % ix.mdims[i]);
        rem /= ix.mdims[i];
      }
      supp_comp.push_back(comp);
      supp_val.push_back(dirichlet[l]);
    }
    scale = std::pow(kTwoPi, -d) / (mod.sum_g2() * static_cast<double>(msize));
  }

  // E{J(w1) J*(w2)} and E{J(w1) J(w2)} for Fourier bins k1, k2 of the base
  // grid: sum over lambda = (support of D) + w1, with per-axis offset tables
  // for f~(lambda), D(lambda - w2) and D(lambda + w2).
  void moments(std::int64_t k1, std::int64_t k2, std::complex<double>& jjstar,
               std::complex<double>& jj) const {
    const int d = ix.d;
    std::array<std::vector<std::int64_t>, 3> off_f, off_sub, off_add;
    {
      std::int64_t r1 = k1, r2 = k2, stride = 1;
      for (int i = 0; i < d; ++i) {
        const int m = ix.mdims[i];
        const int e1 = 2 * static_cast<int>(r1 % ix.ndims[i]);
        const int e2 = 2 * static_cast<int>(r2 % ix.ndims[i]);
        r1 /= ix.ndims[i];
        r2 /= ix.ndims[i];
        off_f[i].resize(m);
        off_sub[i].resize(m);
        off_add[i].resize(m);
        for (int c = 0; c < m; ++c) {
          const int lam = (c + e1) % m;            // lambda component
          off_f[i][c] = stride * lam;
          off_sub[i][c] = stride * ((lam - e2 + m) % m);
          off_add[i][c] = stride * ((lam + e2) % m);
        }
        stride *= m;
      }
    }
    std::complex<double> acc_star(0.0, 0.0), acc(0.0, 0.0);
    const std::size_t nsupp = supp_val.size();
    for (std::size_t j = 0; j < nsupp; ++j) {
      const auto& comp = supp_comp[j];
      std::int64_t lf = 0, ls = 0, la = 0;
      for (int i = 0; i < d; ++i) {
        lf += off_f[i][comp[i]];
        ls += off_sub[i][comp[i]];
        la += off_add[i][comp[i]];
      }
      const std::complex<double> fd1 = ftilde[lf] * supp_val[j];
      acc_star += fd1 * std::conj(dirichlet[ls]);
      acc += fd1 * std::conj(dirichlet[la]);
    }
    jjstar = scale * acc_star;
    jj = scale * acc;
  }

  double periodogram_cov(std::int64_t k1, std::int64_t k2) const {
    std::complex<double> jjstar, jj;
    moments(k1, k2, jjstar, jj);
    return std::norm(jjstar) + std::norm(jj);
  }
};

bool has_fractional_weights(const Modulation& mod) {
  for (Eigen::Index i = 0; i < mod.values().size(); ++i) {
    const double g = mod.values()[i];
    if (g != 0.0 && g != 1.0) return true;
  }
  return false;
}

}  // namespace

MatrixXd expected_hessian(const CovarianceModel& model, const VectorXd& theta,
                          const Modulation& mod, std::span<const int> param_indices,
                          bool exclude_zero_frequency) {
  const int p = static_cast<int>(param_indices.size());
  SpectralField ibar(mod.grid(), ArrayXd::Zero(mod.grid().total_points()));
  std::vector<SpectralField> grads;
  expected_periodogram_with_gradient(model, theta, mod, param_indices, ibar, grads);
  const std::int64_t n = mod.grid().total_points();
  MatrixXd h = MatrixXd::Zero(p, p);
  for (std::int64_t k = exclude_zero_frequency ? 1 : 0; k < n; ++k) {
    const double v = ibar.values[k];
    if (!(v > 0.0))
      throw std::runtime_error("expected_hessian: nonpositive expected periodogram");
    const double inv2 = 1.0 / (v * v);
    for (int r = 0; r < p; ++r)
      for (int c = r; c < p; ++c)
        h(r, c) += inv2 * grads[r].values[k] * grads[c].values[k];
  }
  h /= static_cast<double>(n);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < r; ++c) h(r, c) = h(c, r);
  return h;
}

ScoreCovariance score_covariance_mc(const CovarianceModel& model, const VectorXd& theta,
                                    const Modulation& mod,
                                    std::span<const int> param_indices, int M,
                                    std::uint64_t seed, bool exclude_zero_frequency) {
  if (M < 1) throw std::invalid_argument("score_covariance_mc: M must be >= 1");
  const int p = static_cast<int>(param_indices.size());
  const GridSpec& grid = mod.grid();
  const std::int64_t n = grid.total_points();
  const std::int64_t k0 = exclude_zero_frequency ? 1 : 0;
  const std::int64_t nfreq = n - k0;

  SpectralField ibar(grid, ArrayXd::Zero(n));
  std::vector<SpectralField> grads;
  expected_periodogram_with_gradient(model, theta, mod, param_indices, ibar, grads);

  // A_j(w) = grad_j Ibar / Ibar^2
  std::vector<ArrayXd> a(p);
  for (int j = 0; j < p; ++j) {
    a[j] = ArrayXd::Zero(n);
    for (std::int64_t k = k0; k < n; ++k) {
      const double v = ibar.values[k];
      if (!(v > 0.0))
        throw std::runtime_error("score_covariance_mc: nonpositive expected periodogram");
      a[j][k] = grads[j].values[k] / (v * v);
    }
  }

  const PeriodogramCovEngine engine(model, theta, mod);
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));

  MatrixXd cov = MatrixXd::Zero(p, p);
  MatrixXd mc_se = MatrixXd::Zero(p, p);

  // exact diagonal terms: var{I(w)} = Ibar^2 + |E JJ|^2
  for (std::int64_t k = k0; k < n; ++k) {
    std::complex<double> jjstar, jj;
    engine.moments(k, k, jjstar, jj);
    const double var_i = ibar.values[k] * ibar.values[k] + std::norm(jj);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c)
        cov(r, c) += inv_n2 * a[r][k] * a[c][k] * var_i;
  }

  // near-diagonal pairs carry mass under tapering; sum them exactly
  const bool tapered = has_fractional_weights(mod);
  std::int64_t near_count = 0;
  std::vector<std::int64_t> near_offsets;
  if (tapered) {
    const int d = grid.dim();
    std::int64_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= 3;
    for (std::int64_t c = 0; c < cells; ++c) {
      std::int64_t rem = c, idx = 0, stride = 1;
      bool zero = true;
      for (int i = 0; i < d; ++i) {
        const int o = static_cast<int>(rem % 3) - 1;
        rem /= 3;
        if (o != 0) zero = false;
        int oi = o < 0 ? o + grid.dims()[i] : o;
        idx += stride * oi;
        stride *= grid.dims()[i];
      }
      if (!zero) near_offsets.push_back(idx);
    }
    // small axes alias offsets +1 and -1 to the same bin
    std::sort(near_offsets.begin(), near_offsets.end());
    near_offsets.erase(std::unique(near_offsets.begin(), near_offsets.end()),
                       near_offsets.end());
    near_offsets.erase(std::remove(near_offsets.begin(), near_offsets.end(),
                                   std::int64_t{0}),
                       near_offsets.end());
    for (std::int64_t k1 = k0; k1 < n; ++k1) {
      std::vector<int> s1(grid.dim()), off(grid.dim()), s2(grid.dim());
      grid.site_of(k1, s1);
      for (std::int64_t offset : near_offsets) {
        grid.site_of(offset, off);
        for (int i = 0; i < grid.dim(); ++i)
          s2[i] = (s1[i] + off[i]) % grid.dims()[i];
        const std::int64_t k2 = grid.index_of(s2);
        if (k2 == k1 || k2 < k0) continue;
        const double c_i = engine.periodogram_cov(k1, k2);
        ++near_count;
        for (int r = 0; r < p; ++r)
          for (int c = 0; c < p; ++c)
            cov(r, c) += inv_n2 * a[r][k1] * a[c][k2] * c_i;
      }
    }
  }

  // remaining ordered off-diagonal pairs: exhaustive when M covers them all,
  // otherwise uniform Monte-Carlo scaled by the exact pair count
  const std::int64_t total_pairs = nfreq * (nfreq - 1) - near_count;
  if (total_pairs > 0) {
    auto is_near = [&](std::int64_t k1, std::int64_t k2) {
      if (!tapered) return false;
      std::vector<int> s1(grid.dim()), s2(grid.dim());
      grid.site_of(k1, s1);
      grid.site_of(k2, s2);
      for (int i = 0; i < grid.dim(); ++i) {
        int diff = std::abs(s1[i] - s2[i]);
        diff = std::min(diff, grid.dims()[i] - diff);
        if (diff > 1) return false;
      }
      return true;
    };
    MatrixXd sum_h = MatrixXd::Zero(p, p);
    MatrixXd sum_h2 = MatrixXd::Zero(p, p);
    std::int64_t used = 0;
    if (static_cast<std::int64_t>(M) >= total_pairs) {
      for (std::int64_t k1 = k0; k1 < n; ++k1)
        for (std::int64_t k2 = k0; k2 < n; ++k2) {
          if (k1 == k2 || is_near(k1, k2)) continue;
          const double c_i = engine.periodogram_cov(k1, k2);
          for (int r = 0; r < p; ++r)
            for (int c = 0; c < p; ++c)
              sum_h(r, c) += a[r][k1] * a[c][k2] * c_i;
          ++used;
        }
    } else {
      PhiloxStream rng(seed, 0x50414952u);
      while (used < M) {
        const std::int64_t k1 = k0 + static_cast<std::int64_t>(rng.next_below(nfreq));
        std::int64_t k2 = k0 + static_cast<std::int64_t>(rng.next_below(nfreq - 1));
        if (k2 >= k1) ++k2;
        if (is_near(k1, k2)) continue;
        const double c_i = engine.periodogram_cov(k1, k2);
        for (int r = 0; r < p; ++r)
          for (int c = 0; c < p; ++c) {
            const double h = a[r][k1] * a[c][k2] * c_i;
            sum_h(r, c) += h;
            sum_h2(r, c) += h * h;
          }
        ++used;
      }
    }
    const double scale = static_cast<double>(total_pairs) / static_cast<double>(used);
    cov += inv_n2 * scale * sum_h;
    if (static_cast<std::int64_t>(M) < total_pairs && used > 1) {
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) {
          const double mean = sum_h(r, c) / used;
          const double var = std::max(0.0, sum_h2(r, c) / used - mean * mean);
          mc_se(r, c) = inv_n2 * static_cast<double>(total_pairs) *
                        std::sqrt(var / static_cast<double>(used));
        }
    }
  }

  // the population matrix is symmetric; MC sampling breaks it, restore
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < r; ++c) {
      const double v = 0.5 * (cov(r, c) + cov(c, r));
      cov(r, c) = cov(c, r) = v;
    }
  return {cov, mc_se};
}

MatrixXd sandwich_variance(const MatrixXd& hessian, const MatrixXd& score_cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(hessian);
  const auto& eig = es.eigenvalues();
  const double max_eig = eig.cwiseAbs().maxCoeff();
  if (!(max_eig > 0.0) || eig.minCoeff() <= 1e-12 * max_eig)
    throw std::runtime_error(
        "sandwich_variance: expected Hessian is near-singular; run the "
        "identifiability (HSCC) diagnostic");
  const MatrixXd hinv = es.eigenvectors() * eig.cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
  MatrixXd s = hinv * score_cov * hinv;
  return 0.5 * (s + s.transpose());
}

// Acklam's rational approximation to the standard normal quantile.
double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::domain_error("normal_quantile: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r, x;
  if (prob < plow) {
    q = std::sqrt(-2 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  } else if (prob <= phigh) {
    q = prob - 0.5;
    r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    q = std::sqrt(-2 * std::log(1 - prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  // one Halley step against the normal CDF
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
  const double u = e * std::sqrt(2 * 3.14159265358979323846) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

ParameterVector default_initializer(const RealField& data, const Modulation& mod,
                                    const CovarianceModel& model) {
  ParameterVector p = model.default_parameters();
  const GridSpec& grid = data.grid;
  const int d = grid.dim();
  const double s2 =
      (mod.values().square() * data.values.square()).sum() / mod.sum_g2();
  const double sigma0 = std::sqrt(std::max(s2, 1e-12));

  // first axis lag where the empirical correlation drops below 1/e
  double rho0 = 1.0;
  {
    double best = 0.0;
    int axes_used = 0;
    for (int axis = 0; axis < d; ++axis) {
      const int nmax = grid.dims()[axis];
      if (nmax < 2) continue;
      std::vector<int> site(d);
      double crossing = 0.0;
      for (int h = 1; h < nmax; ++h) {
        double num = 0.0, den = 0.0;
        for (std::int64_t s = 0; s < grid.total_points(); ++s) {
          grid.site_of(s, site);
          if (site[axis] + h >= nmax) continue;
          site[axis] += h;
          const std::int64_t s2i = grid.index_of(site);
          site[axis] -= h;
          const double w = mod.values()[s] * mod.values()[s2i];
          num += w * data.values[s] * data.values[s2i];
          den += w;
        }
        const double corr = (den > 0.0) ? num / (den * s2) : 0.0;
        if (corr < std::exp(-1.0)) {
          crossing = h;
          break;
        }
        crossing = h;
      }
      if (crossing > 0.0) {
        best += crossing;
        ++axes_used;
      }
    }
    if (axes_used > 0) rho0 = std::max(1.0, best / axes_used);
  }

  for (int i = 0; i < p.size(); ++i) {
    const std::string& name = p.names[i];
    double v = p.values[i];
    if (name == "sigma") v = sigma0;
    else if (name == "nu") v = 1.0;
    else if (name.rfind("rho", 0) == 0) v = rho0;
    p.values[i] = std::clamp(v, p.lower[i], p.upper[i]);
  }
  return p;
}

FitResult fit(const RealField& data, const Objective& objective,
              const ParameterVector& theta0, const FitOptions& options) {
  theta0.validate();
  const std::vector<int> free_idx = theta0.free_indices();
  if (free_idx.empty())
    throw std::invalid_argument("fit: at least one parameter must be free");
  objective.model().validate_theta(theta0.values);

  const SpectralField I = objective.compute_periodogram(data);
  const Transform transform(theta0, options.log_transform);

  VectorXd theta_full = theta0.values;
  auto assemble = [&](const VectorXd& theta_free) {
    VectorXd t = theta_full;
    for (std::size_t j = 0; j < free_idx.size(); ++j) t[free_idx[j]] = theta_free[j];
    return t;
  };

  // fail fast if the objective cannot be evaluated at the starting point
  {
    VectorXd f0(free_idx.size());
    for (std::size_t j = 0; j < free_idx.size(); ++j) f0[j] = theta0.values[free_idx[j]];
    (void)objective.nll(I, assemble(f0));
  }

  auto search_objective = [&](const VectorXd& x) -> double {
    const VectorXd theta_free = transform.from_search(x);
    const double pen = transform.bound_penalty(theta_free);
    if (pen > 0.0) return 1e10 * (1.0 + pen);
    try {
      return objective.nll(I, assemble(theta_free));
    } catch (const std::exception&) {
      return 1e12;
    }
  };

  VectorXd start_free(free_idx.size());
  for (std::size_t j = 0; j < free_idx.size(); ++j)
    start_free[j] = theta0.values[free_idx[j]];
  const VectorXd x0 = transform.to_search(start_free);

  MinimizeResult opt;
  if (options.optimizer == OptimizerKind::nelder_mead) {
    opt = nelder_mead(search_objective, x0, options.max_iters, options.rel_tol,
                      options.restarts, options.seed);
  } else {
    auto search_gradient = [&](const VectorXd& x) -> VectorXd {
      const VectorXd theta_free = transform.from_search(x);
      if (transform.bound_penalty(theta_free) > 0.0)
        return VectorXd::Zero(x.size());
      VectorXd g(x.size());
      if (objective.is_debiased()) {
        g = objective.score(I, assemble(theta_free), free_idx);
      } else {
        for (int j = 0; j < x.size(); ++j) {  // FD fallback for the baselines
          const double h = 1e-5 * (1.0 + std::abs(theta_free[j]));
          VectorXd tp = theta_free, tm = theta_free;
          tp[j] += h;
          tm[j] -= h;
          g[j] = (objective.nll(I, assemble(tp)) - objective.nll(I, assemble(tm))) /
                 (2.0 * h);
        }
      }
      for (std::size_t j = 0; j < transform.use_log.size(); ++j)
        if (transform.use_log[j]) g[j] *= theta_free[j];  // chain rule
      return g;
    };
    opt = gradient_descent(search_objective, search_gradient, x0, options.max_iters,
                           options.rel_tol);
  }

  FitResult res;
  res.theta_hat = theta0;
  const VectorXd theta_free_hat = transform.from_search(opt.x);
  for (std::size_t j = 0; j < free_idx.size(); ++j) {
    double v = std::clamp(theta_free_hat[j], transform.lower[j], transform.upper[j]);
    res.theta_hat.values[free_idx[j]] = v;
  }
  res.nll = opt.f;
  res.iterations = opt.iterations;
  res.converged = opt.converged;

  const Modulation& mod = objective.modulation();
  const VectorXd& th = res.theta_hat.values;
  res.rate_rk = std::sqrt(scc_info_ratio(mod, objective.model(), th));
  res.hscc_min_eig =
      hscc_min_eigen(mod, objective.model(), th, free_idx, &res.hscc_trace);
  res.identifiability_warning =
      res.hscc_min_eig <
      1e-8 * res.hscc_trace / static_cast<double>(free_idx.size());
  for (int j : free_idx) {
    const double h = 1e-6 * (1.0 + std::abs(th[j]));
    if (th[j] - theta0.lower[j] < h || theta0.upper[j] - th[j] < h)
      res.at_bound_warning = true;
  }

  if (options.compute_sandwich && objective.is_debiased()) {
    try {
      const MatrixXd hess =
          expected_hessian(objective.model(), th, mod, free_idx,
                           objective.options().exclude_zero_frequency);
      const ScoreCovariance sc = score_covariance_mc(
          objective.model(), th, mod, free_idx, options.sandwich_samples,
          options.seed ^ 0x5345ull, objective.options().exclude_zero_frequency);
      const MatrixXd sand = sandwich_variance(hess, sc.cov);
      res.sandwich_cov = sand;
      const double z = normal_quantile(0.5 + 0.5 * options.ci_level);
      for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const double se = std::sqrt(std::max(0.0, sand(j, j)));
        const double v = th[free_idx[j]];
        res.ci.emplace_back(v - z * se, v + z * se);
      }
    } catch (const std::exception&) {
      res.identifiability_warning = true;
    }
  }
  return res;
}

}  // namespace wf
