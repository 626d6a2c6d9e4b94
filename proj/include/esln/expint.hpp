// expint.hpp — generalized exponential integral for complex arguments.
#pragma once

#include <complex>

namespace esln {

// E_s(z) = integral_1^inf u^{-s} exp(-z*u) du for integer s >= 1 and complex
// z with Re(z) >= 0.  E_s(0) = 1/(s-1) (requires s >= 2).  Power series for
// small |z|, modified-Lentz continued fraction for moderate |z|, asymptotic
// series for large |z|.  Throws std::invalid_argument outside the supported
// domain and std::runtime_error on non-convergence.
std::complex<double> expint_e(int s, std::complex<double> z);

// exp(z) * E_s(z), same domain.  The scaled form lets callers apply the
// exponential prefactor themselves — useful when Re(z) alone determines it
// because the imaginary part is an exact multiple of 2*pi.
std::complex<double> expint_e_scaled(int s, std::complex<double> z);

}  // namespace esln
