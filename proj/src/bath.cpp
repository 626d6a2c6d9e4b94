// bath.cpp — bath spec validation, spectral density, grid construction.
#include "esln/bath.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace esln {

void validate(const BathSpec& bath) {
    if (!(bath.alpha >= 0.0) || !std::isfinite(bath.alpha))
        throw std::invalid_argument("BathSpec: alpha must be finite and >= 0, got " +
                                    std::to_string(bath.alpha));
    if (!(bath.omega_c > 0.0) || !std::isfinite(bath.omega_c))
        throw std::invalid_argument("BathSpec: omega_c must be finite and > 0, got " +
                                    std::to_string(bath.omega_c));
    if (!(bath.beta_hbar > 0.0) || !std::isfinite(bath.beta_hbar))
        throw std::invalid_argument("BathSpec: beta_hbar must be finite and > 0, got " +
                                    std::to_string(bath.beta_hbar));
}

double spectral_density(const BathSpec& bath, double omega) {
    validate(bath);
    if (!(omega >= 0.0))
        throw std::invalid_argument("spectral_density: omega must be >= 0, got " +
                                    std::to_string(omega));
    const double x = omega / bath.omega_c;
    const double d = 1.0 + x * x;
    return bath.alpha * omega / (d * d);
}

namespace {

int infer_steps(double span, double step, const char* what) {
    if (!(step > 0.0) || !std::isfinite(step))
        throw std::invalid_argument(std::string("TimeGrid: ") + what +
                                    " step must be finite and > 0");
    if (span < 0.0)
        throw std::invalid_argument(std::string("TimeGrid: ") + what + " span is negative");
    const double n_real = span / step;
    const int n = static_cast<int>(std::llround(n_real));
    if (std::abs(n * step - span) > 1e-9)
        throw std::invalid_argument(std::string("TimeGrid: ") + what +
                                    " span is not an integer number of steps (|" +
                                    std::to_string(span) + " - " + std::to_string(n) + "*" +
                                    std::to_string(step) + "| > 1e-9)");
    return n;
}

}  // namespace

TimeGrid make_grid(double t0, double t_max, double dt, double dtau, double beta_hbar) {
    if (!std::isfinite(t0) || !std::isfinite(t_max))
        throw std::invalid_argument("TimeGrid: t0 and t_max must be finite");
    if (t_max < t0)
        throw std::invalid_argument("TimeGrid: t_max must be >= t0");
    if (!(beta_hbar > 0.0) || !std::isfinite(beta_hbar))
        throw std::invalid_argument("TimeGrid: beta_hbar must be finite and > 0");
    TimeGrid g;
    g.t0 = t0;
    g.t_max = t_max;
    g.dt = dt;
    g.dtau = dtau;
    g.n_steps = infer_steps(t_max - t0, dt, "real-time");
    g.m_steps = infer_steps(beta_hbar, dtau, "imaginary-time");
    if (g.m_steps < 1)
        throw std::invalid_argument("TimeGrid: need at least one imaginary-time step");
    return g;
}

}  // namespace esln
