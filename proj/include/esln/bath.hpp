// bath.hpp — Ohmic bath specification and simulation grids.
#pragma once

namespace esln {

// Natural units throughout the library: hbar = k_B = 1.  Frequencies and
// inverse times share one scale; beta_hbar is the imaginary-time extent.
struct BathSpec {
    double alpha = 0.05;     // dimensionless coupling strength, >= 0
    double omega_c = 20.0;   // spectral density cutoff frequency, > 0
    double beta_hbar = 1.0;  // inverse temperature (imaginary-time length), > 0
};

// Throws std::invalid_argument if any field is out of range.
void validate(const BathSpec& bath);

// J(omega) = alpha * omega / (1 + (omega/omega_c)^2)^2 for omega >= 0.
// Throws std::invalid_argument for omega < 0 or an invalid spec.
double spectral_density(const BathSpec& bath, double omega);

// Uniform real- and imaginary-time grids.  Real-time nodes are
// t_n = t0 + n*dt, n = 0..n_steps; imaginary-time nodes tau_m = m*dtau,
// m = 0..m_steps with m_steps*dtau = beta_hbar.
struct TimeGrid {
    double t0 = 0.0;     // window start (absolute time)
    double t_max = 6.0;  // window end (absolute time)
    double dt = 1e-3;    // real-time step
    double dtau = 1e-3;  // imaginary-time step
    int n_steps = 6000;  // N with t_max - t0 = N*dt
    int m_steps = 1000;  // M with beta_hbar = M*dtau

    double t(int n) const { return t0 + n * dt; }     // absolute time
    double elapsed(int n) const { return n * dt; }    // time since t0
    double tau(int m) const { return m * dtau; }
};

// Builds a grid, inferring step counts by rounding.  The spans must match
// n_steps*dt and m_steps*dtau to 1e-9 or std::invalid_argument is thrown.
// t_max == t0 is allowed (degenerate real-time window, n_steps = 0).
TimeGrid make_grid(double t0, double t_max, double dt, double dtau, double beta_hbar);

}  // namespace esln
