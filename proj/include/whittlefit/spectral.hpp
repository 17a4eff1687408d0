#pragma once

#include "whittlefit/grid.hpp"
#include "whittlefit/models.hpp"

#include <complex>
#include <span>
#include <vector>

namespace wf {

// Real-valued data on the grid, colexicographic.
struct RealField {
  GridSpec grid;
  ArrayXd values;

  RealField(GridSpec g, ArrayXd v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.total_points())
      throw std::invalid_argument("RealField: value count does not match grid");
  }
};

// Nonnegative values on the Fourier grid Omega_n (frequencies 2 pi k_i / n_i),
// same colexicographic layout as the spatial grid.
struct SpectralField {
  GridSpec grid;
  ArrayXd values;

  SpectralField(GridSpec g, ArrayXd v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.total_points())
      throw std::invalid_argument("SpectralField: value count does not match grid");
  }
};

// I_n(w) = (2pi)^-d (sum g^2)^-1 |sum_s g_s X_s e^{-i w.s}|^2 on Omega_n.
SpectralField periodogram(const RealField& data, const Modulation& mod);

// E I_n(w; theta): c_g(u) c_X(u; theta) over the lag box, folded 2^d copies
// into one size-n buffer, one FFT, scaled by (2pi)^-d.
SpectralField expected_periodogram(const CovarianceModel& model, const VectorXd& theta,
                                   const Modulation& mod);

// One field per requested parameter index: same folding path applied to
// c_g(u) (d c_X / d theta_j)(u).
std::vector<SpectralField> expected_periodogram_gradient(
    const CovarianceModel& model, const VectorXd& theta, const Modulation& mod,
    std::span<const int> param_indices);

// Both at once; the covariance sweep over the lag box is shared.
void expected_periodogram_with_gradient(const CovarianceModel& model,
                                        const VectorXd& theta, const Modulation& mod,
                                        std::span<const int> param_indices,
                                        SpectralField& value,
                                        std::vector<SpectralField>& gradient);

// Non-centred modified Dirichlet kernel D_n(lambda) = sum_s g_s e^{i lambda.s}.
std::complex<double> dirichlet_kernel(const Modulation& mod,
                                      std::span<const double> lambda);

// Weighted sample mean sum(g X)/sum(g) subtracted at observed sites.
RealField demean(const RealField& data, const Modulation& mod);

}  // namespace wf
