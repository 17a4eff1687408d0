#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace wf {

using Eigen::ArrayXd;

// Rectangular bounding grid: per-axis point counts and spacing. Values are
// stored colexicographically (first axis fastest). Spacing is metadata only;
// internal math uses unit spacing and spacing rescales reported frequencies
// and lags.
class GridSpec {
 public:
  GridSpec(std::vector<int> dims, std::vector<double> spacing);
  explicit GridSpec(std::vector<int> dims);

  int dim() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<double>& spacing() const { return spacing_; }
  std::int64_t total_points() const { return total_; }

  // colexicographic strides: stride[0] = 1, stride[i+1] = stride[i]*dims[i]
  const std::vector<std::int64_t>& strides() const { return strides_; }

  std::int64_t index_of(std::span<const int> site) const;
  void site_of(std::int64_t index, std::span<int> site) const;

  // Fourier frequency 2*pi*k_i/n_i of the colex-indexed bin k.
  void frequency_of(std::int64_t index, std::span<double> omega) const;

  bool operator==(const GridSpec& o) const {
    return dims_ == o.dims_ && spacing_ == o.spacing_;
  }

 private:
  std::vector<int> dims_;
  std::vector<double> spacing_;
  std::vector<std::int64_t> strides_;
  std::int64_t total_ = 0;
};

class LagField;

// Per-site weights g_s in [0,1]: 0 = missing, 1 = observed, fractional =
// taper. Immutable; the lag autocorrelation is computed lazily and cached.
class Modulation {
 public:
  Modulation(GridSpec grid, ArrayXd values);

  static Modulation ones(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  const ArrayXd& values() const { return values_; }
  double sum_g() const { return sum_g_; }
  double sum_g2() const { return sum_g2_; }

  // c_{g,n}; throws if the modulation is identically zero.
  const LagField& autocorrelation() const;

 private:
  // copies share the lazily computed autocorrelation
  struct AutocorrCache {
    std::once_flag once;
    std::shared_ptr<const LagField> field;
  };

  GridSpec grid_;
  ArrayXd values_;
  double sum_g_ = 0.0;
  double sum_g2_ = 0.0;
  std::shared_ptr<AutocorrCache> cache_;
};

// Real values over the lag box prod_i {-(n_i-1),..,n_i-1}, stored folded on
// an embedding of size 2 n_i per axis so that lag u lives at index
// u mod 2n_i. Entries at the unreachable lag +-n_i are zero.
class LagField {
 public:
  explicit LagField(GridSpec base);

  const GridSpec& base() const { return base_; }
  const std::vector<int>& embed_dims() const { return embed_dims_; }
  std::int64_t embed_size() const { return static_cast<std::int64_t>(values_.size()); }

  ArrayXd& values() { return values_; }
  const ArrayXd& values() const { return values_; }

  double at(std::span<const int> lag) const;
  std::int64_t embed_index(std::span<const int> lag) const;
  // Inverse of the folding: embedding index -> signed lag components.
  void lag_of(std::int64_t embed_index, std::span<int> lag) const;

 private:
  GridSpec base_;
  std::vector<int> embed_dims_;
  std::vector<std::int64_t> embed_strides_;
  ArrayXd values_;
};

// c_{g,n}(u) = sum_s g_s g_{s+u} / sum_s g_s^2 for all lags, via one FFT of g
// zero-padded to 2n per axis. Throws on an identically zero modulation.
LagField mask_autocorrelation(const Modulation& mod);

// Closed form for complete observations: prod_i (1 - |u_i|/n_i), zero outside
// the lag box.
double full_grid_autocorrelation(const GridSpec& grid, std::span<const int> lag);

// Elementwise product of g with a separable Hann window
// h_i(j) = 0.5 (1 - cos(2 pi j / (n_i - 1))). Requires every n_i >= 2.
Modulation hanning_modulation(const Modulation& mod);

// (2pi)^-d (sum g^2)^-1 |sum_s g_s e^{i w.s}|^2; diagnostics/tests only.
double fejer_kernel(const Modulation& mod, std::span<const double> omega);

}  // namespace wf
