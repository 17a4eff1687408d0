#include "whittlefit/spectral.hpp"

#include "whittlefit/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace wf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Fold a lag-box field (stored on the 2n embedding) into a size-n buffer:
// acc[u mod n] = sum of the 2^d shifted copies c(u - q o n).
void fold_into(const LagField& lf, std::complex<double>* acc) {
  const GridSpec& base = lf.base();
  const int d = base.dim();
  const std::int64_t msize = lf.embed_size();
  const std::vector<int>& mdims = lf.embed_dims();
  const std::vector<int>& ndims = base.dims();
  for (std::int64_t i = 0; i < msize; ++i) {
    const double v = lf.values()[i];
    if (v == 0.0) continue;
    std::int64_t rem = i, idx = 0, stride = 1;
    for (int a = 0; a < d; ++a) {
      const int mi = static_cast<int>(rem % mdims[a]);
      rem /= mdims[a];
      idx += stride * (mi % ndims[a]);
      stride *= ndims[a];
    }
    acc[idx] += v;
  }
}

// c_g(u) * eval(u) over the lag box, on the 2n embedding.
LagField weighted_lag_field(const Modulation& mod, const CovFn& eval) {
  const LagField& cg = mod.autocorrelation();
  LagField out(mod.grid());
  const int d = mod.grid().dim();
  std::vector<int> lag(d);
  std::vector<double> u(d);
  for (std::int64_t i = 0; i < cg.embed_size(); ++i) {
    const double w = cg.values()[i];
    if (w == 0.0) continue;
    cg.lag_of(i, lag);
    for (int a = 0; a < d; ++a) u[a] = static_cast<double>(lag[a]);
    out.values()[i] = w * eval(u);
  }
  return out;
}

SpectralField fft_of_folded(const LagField& lf) {
  const GridSpec& base = lf.base();
  std::vector<std::complex<double>> buf(base.total_points(), 0.0);
  fold_into(lf, buf.data());
  fft::forward(base.dims(), buf.data(), buf.data());
  ArrayXd out(base.total_points());
  const double scale = std::pow(kTwoPi, -base.dim());
  for (std::int64_t k = 0; k < base.total_points(); ++k)
    out[k] = scale * buf[k].real();
  return SpectralField(base, std::move(out));
}

}  // namespace

SpectralField periodogram(const RealField& data, const Modulation& mod) {
  if (!(data.grid == mod.grid()))
    throw std::invalid_argument("periodogram: data and modulation grids differ");
  if (!(mod.sum_g2() > 0.0))
    throw std::invalid_argument("periodogram: empty observation set");
  const GridSpec& grid = data.grid;
  std::vector<std::complex<double>> buf(grid.total_points());
  for (std::int64_t s = 0; s < grid.total_points(); ++s)
    buf[s] = mod.values()[s] * data.values[s];
  fft::forward(grid.dims(), buf.data(), buf.data());
  ArrayXd out(grid.total_points());
  const double scale = std::pow(kTwoPi, -grid.dim()) / mod.sum_g2();
  for (std::int64_t k = 0; k < grid.total_points(); ++k)
    out[k] = scale * std::norm(buf[k]);
  return SpectralField(grid, std::move(out));
}

SpectralField expected_periodogram(const CovarianceModel& model, const VectorXd& theta,
                                   const Modulation& mod) {
  if (!(mod.sum_g2() > 0.0))
    throw std::invalid_argument("expected_periodogram: empty observation set");
  return fft_of_folded(weighted_lag_field(mod, model.bind_cov(theta)));
}

std::vector<SpectralField> expected_periodogram_gradient(
    const CovarianceModel& model, const VectorXd& theta, const Modulation& mod,
    std::span<const int> param_indices) {
  if (!(mod.sum_g2() > 0.0))
    throw std::invalid_argument("expected_periodogram_gradient: empty observation set");
  const CovGradFn grad = model.bind_cov_grad(theta);
  const int p = model.n_params();
  std::vector<double> gbuf(p);
  std::vector<SpectralField> out;
  out.reserve(param_indices.size());
  for (int j : param_indices) {
    auto component = [&grad, &gbuf, j](std::span<const double> u) {
      grad(u, gbuf);
      return gbuf[j];
    };
    out.push_back(fft_of_folded(weighted_lag_field(mod, component)));
  }
  return out;
}

void expected_periodogram_with_gradient(const CovarianceModel& model,
                                        const VectorXd& theta, const Modulation& mod,
                                        std::span<const int> param_indices,
                                        SpectralField& value,
                                        std::vector<SpectralField>& gradient) {
  if (!(mod.sum_g2() > 0.0))
    throw std::invalid_argument("expected_periodogram: empty observation set");
  const LagField& cg = mod.autocorrelation();
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  const int p = model.n_params();
  const CovFn eval = model.bind_cov(theta);
  const CovGradFn grad = model.bind_cov_grad(theta);

  LagField cbar(grid);
  std::vector<LagField> gbar;
  gbar.reserve(param_indices.size());
  for (std::size_t j = 0; j < param_indices.size(); ++j) gbar.emplace_back(grid);

  std::vector<int> lag(d);
  std::vector<double> u(d), g(p);
  for (std::int64_t i = 0; i < cg.embed_size(); ++i) {
    const double w = cg.values()[i];
    if (w == 0.0) continue;
    cg.lag_of(i, lag);
    for (int a = 0; a < d; ++a) u[a] = static_cast<double>(lag[a]);
    cbar.values()[i] = w * eval(u);
    grad(u, g);
    for (std::size_t j = 0; j < param_indices.size(); ++j)
      gbar[j].values()[i] = w * g[param_indices[j]];
  }
  value = fft_of_folded(cbar);
  gradient.clear();
  gradient.reserve(param_indices.size());
  for (auto& lf : gbar) gradient.push_back(fft_of_folded(lf));
}

std::complex<double> dirichlet_kernel(const Modulation& mod,
                                      std::span<const double> lambda) {
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  std::complex<double> acc(0.0, 0.0);
  std::vector<int> site(d);
  for (std::int64_t s = 0; s < grid.total_points(); ++s) {
    const double g = mod.values()[s];
    if (g == 0.0) continue;
    grid.site_of(s, site);
    double phase = 0.0;
    for (int i = 0; i < d; ++i) phase += lambda[i] * site[i];
    acc += g * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return acc;
}

RealField demean(const RealField& data, const Modulation& mod) {
  if (!(data.grid == mod.grid()))
    throw std::invalid_argument("demean: data and modulation grids differ");
  if (!(mod.sum_g() > 0.0))
    throw std::invalid_argument("demean: empty observation set");
  const double mean = (mod.values() * data.values).sum() / mod.sum_g();
  ArrayXd out = data.values;
  for (Eigen::Index s = 0; s < out.size(); ++s)
    if (mod.values()[s] > 0.0) out[s] -= mean;
  return RealField(data.grid, std::move(out));
}

}  // namespace wf
