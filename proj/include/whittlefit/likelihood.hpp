#pragma once

#include "whittlefit/spectral.hpp"

#include <optional>

namespace wf {

enum class Variant { debiased, debiased_tapered, standard, standard_tapered, fuentes };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

struct ObjectiveOptions {
  bool exclude_zero_frequency = false;
  // shells of the aliasing sum for the standard baseline; 0 = plain spectral
  // density (the naive baseline), < 0 = adaptive
  int alias_truncation = 0;
};

// Bundles the pieces an objective evaluation needs for fixed data: the
// variant, the model, and the effective modulation (taper already folded in
// for the *_tapered variants). The periodogram is computed once per fit and
// shared across theta evaluations.
class Objective {
 public:
  Objective(Variant variant, ModelPtr model, Modulation base_mod,
            ObjectiveOptions opts = {});

  Variant variant() const { return variant_; }
  const CovarianceModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const Modulation& modulation() const { return mod_; }
  const ObjectiveOptions& options() const { return opts_; }
  bool is_debiased() const {
    return variant_ == Variant::debiased || variant_ == Variant::debiased_tapered;
  }

  SpectralField compute_periodogram(const RealField& data) const;

  double nll(const SpectralField& I, const VectorXd& theta) const;
  VectorXd score(const SpectralField& I, const VectorXd& theta,
                 std::span<const int> param_indices) const;

 private:
  Variant variant_;
  ModelPtr model_;
  Modulation mod_;
  ObjectiveOptions opts_;
};

// l(theta) = |n|^-1 sum_w { log Ibar(w;theta) + I(w)/Ibar(w;theta) }.
double debiased_nll(const SpectralField& I, const CovarianceModel& model,
                    const VectorXd& theta, const Modulation& mod,
                    const ObjectiveOptions& opts = {});

// Same form with Ibar replaced by the aliased spectral density.
double standard_nll(const SpectralField& I, const CovarianceModel& model,
                    const VectorXd& theta, const ObjectiveOptions& opts = {});

// grad l = |n|^-1 sum_w Ibar^-2 grad Ibar (Ibar - I), debiased objective.
VectorXd score(const SpectralField& I, const CovarianceModel& model,
               const VectorXd& theta, const Modulation& mod,
               std::span<const int> param_indices, const ObjectiveOptions& opts = {});

}  // namespace wf
