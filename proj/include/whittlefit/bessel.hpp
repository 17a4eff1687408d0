#pragma once

namespace wf {

// Modified Bessel function of the second kind K_nu(x) for nu > 0, x > 0.
// Temme's series for x <= 2, Steed's continued fraction for x > 2, then
// upward recurrence in the order. Relative error <= 1e-10 over
// nu in (0, 20], x in (1e-8, 700].
//
// Throws std::domain_error for nu <= 0 or x <= 0, std::range_error when the
// result over/underflows double precision.
double bessel_k(double nu, double x);

// d K_nu / dx = -(K_{nu-1}(x) + K_{nu+1}(x)) / 2
double bessel_k_derivative(double nu, double x);

}  // namespace wf
