#include "whittlefit/grid.hpp"

#include "whittlefit/fft.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace wf {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
// Inverse-FFT noise below this level is clamped to zero so sparsity-based
// diagnostics stay exact.
constexpr double kAutocorrClamp = 1e-14;
}  // namespace

GridSpec::GridSpec(std::vector<int> dims, std::vector<double> spacing)
    : dims_(std::move(dims)), spacing_(std::move(spacing)) {
  if (dims_.empty()) throw std::invalid_argument("GridSpec: dimension d must be >= 1");
  if (spacing_.size() != dims_.size())
    throw std::invalid_argument("GridSpec: dims/spacing size mismatch");
  strides_.resize(dims_.size());
  total_ = 1;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] < 1) throw std::invalid_argument("GridSpec: every n_i must be >= 1");
    if (!(spacing_[i] > 0.0)) throw std::invalid_argument("GridSpec: every delta_i must be > 0");
    strides_[i] = total_;
    if (total_ > std::numeric_limits<std::int64_t>::max() / dims_[i])
      throw std::invalid_argument("GridSpec: total point count overflows");
    total_ *= dims_[i];
  }
}

GridSpec::GridSpec(std::vector<int> dims)
    : GridSpec(dims, std::vector<double>(dims.size(), 1.0)) {}

std::int64_t GridSpec::index_of(std::span<const int> site) const {
  std::int64_t idx = 0;
  for (int i = 0; i < dim(); ++i) idx += strides_[i] * site[i];
  return idx;
}

void GridSpec::site_of(std::int64_t index, std::span<int> site) const {
  for (int i = 0; i < dim(); ++i) {
    site[i] = static_cast<int>(index % dims_[i]);
    index /= dims_[i];
  }
}

void GridSpec::frequency_of(std::int64_t index, std::span<double> omega) const {
  for (int i = 0; i < dim(); ++i) {
    omega[i] = kTwoPi * static_cast<double>(index % dims_[i]) / dims_[i];
    index /= dims_[i];
  }
}

Modulation::Modulation(GridSpec grid, ArrayXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.total_points())
    throw std::invalid_argument("Modulation: value count does not match grid");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double g = values_[i];
    if (!(g >= 0.0 && g <= 1.0))
      throw std::invalid_argument("Modulation: weights must lie in [0,1]");
  }
  sum_g_ = values_.sum();
  sum_g2_ = values_.square().sum();
  cache_ = std::make_shared<AutocorrCache>();
}

Modulation Modulation::ones(const GridSpec& grid) {
  return Modulation(grid, ArrayXd::Ones(grid.total_points()));
}

const LagField& Modulation::autocorrelation() const {
  std::call_once(cache_->once, [this] {
    cache_->field = std::make_shared<const LagField>(mask_autocorrelation(*this));
  });
  return *cache_->field;
}

LagField::LagField(GridSpec base) : base_(std::move(base)) {
  embed_dims_.resize(base_.dim());
  embed_strides_.resize(base_.dim());
  std::int64_t total = 1;
  for (int i = 0; i < base_.dim(); ++i) {
    embed_dims_[i] = 2 * base_.dims()[i];
    embed_strides_[i] = total;
    total *= embed_dims_[i];
  }
  values_ = ArrayXd::Zero(total);
}

std::int64_t LagField::embed_index(std::span<const int> lag) const {
  std::int64_t idx = 0;
  for (int i = 0; i < base_.dim(); ++i) {
    int u = lag[i];
    const int m = embed_dims_[i];
    u %= m;
    if (u < 0) u += m;
    idx += embed_strides_[i] * u;
  }
  return idx;
}

double LagField::at(std::span<const int> lag) const {
  for (int i = 0; i < base_.dim(); ++i)
    if (std::abs(lag[i]) > base_.dims()[i] - 1) return 0.0;
  return values_[embed_index(lag)];
}

void LagField::lag_of(std::int64_t embed_index, std::span<int> lag) const {
  for (int i = 0; i < base_.dim(); ++i) {
    int u = static_cast<int>(embed_index % embed_dims_[i]);
    embed_index /= embed_dims_[i];
    if (u >= base_.dims()[i]) u -= embed_dims_[i];
    lag[i] = u;
  }
}

LagField mask_autocorrelation(const Modulation& mod) {
  if (!(mod.sum_g2() > 0.0))
    throw std::invalid_argument("mask_autocorrelation: empty observation set");
  const GridSpec& grid = mod.grid();
  LagField out(grid);
  const std::vector<int>& mdims = out.embed_dims();
  const std::int64_t msize = out.embed_size();

  std::vector<std::complex<double>> buf(msize, 0.0);
  // scatter g into the zero-padded embedding
  const int d = grid.dim();
  std::vector<int> site(d);
  for (std::int64_t s = 0; s < grid.total_points(); ++s) {
    grid.site_of(s, site);
    std::int64_t idx = 0, stride = 1;
    for (int i = 0; i < d; ++i) {
      idx += stride * site[i];
      stride *= mdims[i];
    }
    buf[idx] = mod.values()[s];
  }
  fft::forward(mdims, buf.data(), buf.data());
  for (auto& z : buf) z = std::norm(z);
  fft::backward(mdims, buf.data(), buf.data());

  const double scale = 1.0 / (static_cast<double>(msize) * mod.sum_g2());
  for (std::int64_t i = 0; i < msize; ++i) {
    double c = buf[i].real() * scale;
    if (std::abs(c) < kAutocorrClamp) c = 0.0;
    if (c > 1.0) c = 1.0;
    if (c < 0.0) c = 0.0;
    out.values()[i] = c;
  }
  return out;
}

double full_grid_autocorrelation(const GridSpec& grid, std::span<const int> lag) {
  double prod = 1.0;
  for (int i = 0; i < grid.dim(); ++i) {
    const int n = grid.dims()[i];
    const int a = std::abs(lag[i]);
    if (a > n - 1) return 0.0;
    prod *= 1.0 - static_cast<double>(a) / n;
  }
  return prod;
}

Modulation hanning_modulation(const Modulation& mod) {
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  for (int i = 0; i < d; ++i)
    if (grid.dims()[i] < 2)
      throw std::invalid_argument("hanning_modulation: every n_i must be >= 2");
  ArrayXd out(grid.total_points());
  std::vector<int> site(d);
  for (std::int64_t s = 0; s < grid.total_points(); ++s) {
    grid.site_of(s, site);
    double h = 1.0;
    for (int i = 0; i < d; ++i)
      h *= 0.5 * (1.0 - std::cos(kTwoPi * site[i] / (grid.dims()[i] - 1)));
    out[s] = mod.values()[s] * h;
  }
  return Modulation(grid, std::move(out));
}

double fejer_kernel(const Modulation& mod, std::span<const double> omega) {
  if (!(mod.sum_g2() > 0.0))
    throw std::invalid_argument("fejer_kernel: empty observation set");
  const GridSpec& grid = mod.grid();
  const int d = grid.dim();
  std::complex<double> acc(0.0, 0.0);
  std::vector<int> site(d);
  for (std::int64_t s = 0; s < grid.total_points(); ++s) {
    const double g = mod.values()[s];
    if (g == 0.0) continue;
    grid.site_of(s, site);
    double phase = 0.0;
    for (int i = 0; i < d; ++i) phase += omega[i] * site[i];
    acc += g * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return std::pow(kTwoPi, -d) * std::norm(acc) / mod.sum_g2();
}

}  // namespace wf
