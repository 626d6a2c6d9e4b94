// kernels.hpp — bath correlation kernels evaluated on simulation grids.
//
// Four two-point kernels drive the noise construction:
//   K_eta_eta(t)      real, even        ∫(dω/π) J coth(βω/2) cos(ωt)
//   K_eta_nu(t)       purely imaginary, −2iΘ(t)∫(dω/π) J sin(ωt), Θ(0)=0
//   K_mu_mu(τ)        real,             ∫(dω/π) J [cosh(ωτ)coth(βω/2) − sinh(ωτ)]
//   K_eta_mu(t, τ)    complex,          −∫(dω/π) J [(1+n)e^{−ωτ}e^{−iωt} + n e^{ωτ}e^{iωt}]
// with n(ω) the Bose occupation.  hbar = k_B = 1.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "esln/bath.hpp"

namespace esln {

struct QuadratureSpec {
    int log2_nodes = 19;            // initial frequency grid has 2^log2_nodes panels
    int max_doublings = 3;          // refinement budget for the certificate
    double certificate_tol = 1e-8;  // sup-norm relative change allowed under doubling
    bool certify = true;            // false: single pass at log2_nodes, no certificate
};

// Kernel tables over the grid.  k_eta_eta/k_eta_nu are stored for lags
// 0..N (evenness resp. causality supply the rest), k_mu_mu for 0..M,
// k_eta_mu as a dense row-major (N+1) x (M+1) table.  ext_* extend the
// real-time kernels to the circulant length P = next_pow2(2*(2N+1)) used by
// the noise builder: ext_eta_eta holds lags 0..P/2, ext_eta_nu lags 0..P-1.
struct KernelTable {
    BathSpec bath;
    TimeGrid grid;
    bool has_thermal = true;  // false: k_mu_mu / k_eta_mu not built

    std::vector<double> k_eta_eta;
    std::vector<std::complex<double>> k_eta_nu;
    std::vector<double> k_mu_mu;
    std::vector<std::complex<double>> k_eta_mu;

    std::size_t ext_len = 0;
    std::vector<double> ext_eta_eta;
    std::vector<std::complex<double>> ext_eta_nu;

    double certificate_residual = 0.0;  // achieved sup-norm relative change
    int log2_nodes_used = 0;

    std::complex<double> eta_mu(int n, int m) const {
        return k_eta_mu[static_cast<std::size_t>(n) * (grid.m_steps + 1) + m];
    }
};

// Evaluates all tables by FFT quadrature over a uniform frequency grid
// [0, 2π/dt] (trapezoid rule with analytic Euler-Maclaurin endpoint
// corrections) plus analytic high-frequency tails.  When quad.certify is set
// the resolution doubles until no table entry moves by more than
// certificate_tol (relative to the table sup); if the budget runs out a
// std::runtime_error reports the achieved residual.  Preconditions: the
// integration cutoff 2π/dt must be >= 20*omega_c, grid and bath valid;
// violations throw std::invalid_argument.
KernelTable eval_kernels(const BathSpec& bath, const TimeGrid& grid,
                         const QuadratureSpec& quad = {}, bool with_thermal = true);

}  // namespace esln
