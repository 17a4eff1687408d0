#include "whittlefit/likelihood.hpp"

#include <cmath>
#include <stdexcept>

namespace wf {

namespace {

double whittle_sum(const SpectralField& I, const ArrayXd& denom, bool exclude_zero,
                   const char* what) {
  const std::int64_t n = I.grid.total_points();
  double acc = 0.0;
  for (std::int64_t k = exclude_zero ? 1 : 0; k < n; ++k) {
    const double ibar = denom[k];
    if (!(ibar > 0.0))
      throw std::runtime_error(std::string(what) +
                               ": nonpositive expected value at frequency bin " +
                               std::to_string(k) + " (model misconfiguration)");
    acc += std::log(ibar) + I.values[k] / ibar;
  }
  return acc / static_cast<double>(n);
}

ArrayXd aliased_density_field(const CovarianceModel& model, const VectorXd& theta,
                              const GridSpec& grid, int K) {
  const std::int64_t n = grid.total_points();
  const int d = grid.dim();
  ArrayXd out(n);
  std::vector<double> omega(d);
  for (std::int64_t k = 0; k < n; ++k) {
    grid.frequency_of(k, omega);
    // evaluate on (-pi, pi] per axis; the aliased sum is 2pi-periodic but
    // shell truncation converges fastest from the centred representative
    for (int i = 0; i < d; ++i)
      if (omega[i] > 3.14159265358979323846) omega[i] -= 6.28318530717958647692;
    out[k] = model.aliased_spectral_density(omega, theta, K, d);
  }
  return out;
}

}  // namespace

Variant variant_from_string(const std::string& s) {
  if (s == "debiased") return Variant::debiased;
  if (s == "debiased_tapered") return Variant::debiased_tapered;
  if (s == "standard") return Variant::standard;
  if (s == "standard_tapered") return Variant::standard_tapered;
  if (s == "fuentes") return Variant::fuentes;
  throw std::invalid_argument("unknown objective variant '" + s + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::debiased: return "debiased";
    case Variant::debiased_tapered: return "debiased_tapered";
    case Variant::standard: return "standard";
    case Variant::standard_tapered: return "standard_tapered";
    case Variant::fuentes: return "fuentes";
  }
  return "?";
}

Objective::Objective(Variant variant, ModelPtr model, Modulation base_mod,
                     ObjectiveOptions opts)
    : variant_(variant),
      model_(std::move(model)),
      mod_(variant == Variant::debiased_tapered || variant == Variant::standard_tapered
               ? hanning_modulation(base_mod)
               : std::move(base_mod)),
      opts_(opts) {
  if (!(mod_.sum_g2() > 0.0))
    throw std::invalid_argument("Objective: empty observation set");
}

SpectralField Objective::compute_periodogram(const RealField& data) const {
  return periodogram(data, mod_);
}

double Objective::nll(const SpectralField& I, const VectorXd& theta) const {
  if (is_debiased()) return debiased_nll(I, *model_, theta, mod_, opts_);
  return standard_nll(I, *model_, theta, opts_);
}

VectorXd Objective::score(const SpectralField& I, const VectorXd& theta,
                          std::span<const int> param_indices) const {
  if (!is_debiased())
    throw std::runtime_error("score: analytic score is defined for the debiased variants");
  return wf::score(I, *model_, theta, mod_, param_indices, opts_);
}

double debiased_nll(const SpectralField& I, const CovarianceModel& model,
                    const VectorXd& theta, const Modulation& mod,
                    const ObjectiveOptions& opts) {
  const SpectralField ibar = expected_periodogram(model, theta, mod);
  return whittle_sum(I, ibar.values, opts.exclude_zero_frequency, "debiased_nll");
}

double standard_nll(const SpectralField& I, const CovarianceModel& model,
                    const VectorXd& theta, const ObjectiveOptions& opts) {
  const ArrayXd f = aliased_density_field(model, theta, I.grid, opts.alias_truncation);
  return whittle_sum(I, f, opts.exclude_zero_frequency, "standard_nll");
}

VectorXd score(const SpectralField& I, const CovarianceModel& model,
               const VectorXd& theta, const Modulation& mod,
               std::span<const int> param_indices, const ObjectiveOptions& opts) {
  SpectralField ibar(I.grid, ArrayXd::Zero(I.grid.total_points()));
  std::vector<SpectralField> grads;
  expected_periodogram_with_gradient(model, theta, mod, param_indices, ibar, grads);
  const std::int64_t n = I.grid.total_points();
  VectorXd out = VectorXd::Zero(static_cast<int>(param_indices.size()));
  for (std::int64_t k = opts.exclude_zero_frequency ? 1 : 0; k < n; ++k) {
    const double v = ibar.values[k];
    if (!(v > 0.0))
      throw std::runtime_error("score: nonpositive expected value at frequency bin " +
                               std::to_string(k));
    const double w = (v - I.values[k]) / (v * v);
    for (std::size_t j = 0; j < param_indices.size(); ++j)
      out[static_cast<int>(j)] += grads[j].values[k] * w;
  }
  return out / static_cast<double>(n);
}

}  // namespace wf
