// filters.hpp — circulant noise filters built from kernel tables.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "esln/kernels.hpp"

namespace esln {

// Discrete filters that colour independent white streams into correlated
// noises.  Conventions (step = dt or dtau):
//   - spectra satisfy ghat^2 = Khat * step, so circular convolution with
//     whites of variance 1/step reproduces the kernel circle exactly;
//   - the real-time circle p_re = next_pow2(2*(2N+1)) leaves no wrap-around
//     over the window; the imaginary-time circle p_im = 4M is a multiple of
//     the exact even period 2M of the folded kernel;
//   - the thermal cross filter is never materialised: g_eta_mu(n, m) =
//     -(i/2) K_eta_mu(n, m) dtau is read off the owned kernel table, and the
//     mu-side partner of the pair is a unit delta (mu_eta stays white).
struct FilterSet {
    KernelTable kernels;  // owned source tables
    std::size_t p_re = 0, p_im = 0;

    std::vector<double> g_eta_eta;               // p_re lag taps
    std::vector<std::complex<double>> g_eta_nu;  // p_re
    std::vector<std::complex<double>> g_nu_eta;  // p_re
    std::vector<double> g_mu_mu;                 // p_im (empty without thermal tables)
    bool mu_eta_is_white = true;

    // spectra kept alongside the taps so synthesis skips one transform
    std::vector<double> spectrum_eta_eta;               // p_re
    std::vector<std::complex<double>> spectrum_eta_nu;  // p_re
    std::vector<double> spectrum_mu_mu;                 // p_im

    double sum_g2_eta_eta = 0.0;  // sum of squared taps = K_eta_eta(0)*dt
    double sum_g2_mu_mu = 0.0;    // = K_mu_mu(0)*dtau
    int eta_mu_rows = 0;  // rows of the cross filter above 1e-17 of its sup

    std::complex<double> g_eta_mu(int n, int m) const {
        return std::complex<double>(0.0, -0.5 * kernels.grid.dtau) * kernels.eta_mu(n, m);
    }
};

// Builds every filter from the kernel tables (taking ownership of them).
// Spectra are clamped to zero on bins above -1e-10 * max; anything below
// that is a hard std::runtime_error naming the offending bin.
FilterSet build_filters(KernelTable table);

}  // namespace esln
