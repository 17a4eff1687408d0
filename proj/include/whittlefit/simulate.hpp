#pragma once

#include "whittlefit/models.hpp"
#include "whittlefit/spectral.hpp"

#include <cstdint>
#include <utility>

namespace wf {

// Circulant embedding of the covariance on an FFT-friendly torus of at least
// twice the base grid per axis. Eigenvalues used for sampling are nonnegative
// after treatment; clamping is recorded.
struct EmbeddingPlan {
  GridSpec base;
  std::vector<int> embed_dims;
  ArrayXd eigenvalues;
  int clamp_count = 0;
  double clamp_magnitude = 0.0;  // most negative eigenvalue before clamping
  int doublings = 0;
};

// Builds the embedding, doubling at most twice when eigenvalues fall below
// -1e-6 * max; beyond that an error is raised unless allow_approx clamps the
// negatives to zero.
EmbeddingPlan plan_embedding(const CovarianceModel& model, const VectorXd& theta,
                             const GridSpec& grid, bool allow_approx = false);

// One complex simulation yields two independent mean-zero real fields with
// covariance c_X(.; theta). Deterministic per (seed, replicate).
std::pair<RealField, RealField> simulate_pair(const EmbeddingPlan& plan,
                                              std::uint64_t seed,
                                              std::uint64_t replicate);

RealField simulate_field(const CovarianceModel& model, const VectorXd& theta,
                         const GridSpec& grid, std::uint64_t seed,
                         bool allow_approx = false);

// g_s = 1 iff ||s - center|| <= diameter/2 with center ((n_1-1)/2, ...).
Modulation circle_mask(const GridSpec& grid, double diameter);

// i.i.d. Bernoulli(p) site observation; deterministic per seed.
Modulation bernoulli_mask(const GridSpec& grid, double p, std::uint64_t seed);

int next_fft_friendly(int n);  // smallest 2^a 3^b 5^c >= n

}  // namespace wf
