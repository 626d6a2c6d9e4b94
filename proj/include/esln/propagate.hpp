// propagate.hpp — single-trajectory integrators: imaginary-time thermal
// preparation and the real-time stochastic Liouville–von Neumann steppers.
#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "esln/bath.hpp"
#include "esln/filters.hpp"
#include "esln/noise.hpp"

namespace esln {

// ---- drive protocol ----

// Two-level drive H(t) = (delta/2) sigma_x + (epsilon(t)/2) sigma_z with a
// constant bias or a linear sweep epsilon(t) = kappa * t in absolute time.
struct SpinBosonDrive {
    double delta = 1.0;
    bool swept = false;  // false: epsilon(t) = epsilon0; true: kappa * t
    double epsilon0 = 0.0;
    double kappa = 0.0;

    double epsilon_at(double t) const { return swept ? kappa * t : epsilon0; }
};

SpinBosonDrive constant_drive(double delta, double epsilon0);
SpinBosonDrive sweep_drive(double delta, double kappa);

// Throws std::invalid_argument when delta is not finite, when a sweep rate is
// not finite or zero, or when a sweep with kappa > 0 does not cross the bias
// zero inside the window: epsilon(t0) < 0 < epsilon(t_max).
void validate_drive(const SpinBosonDrive& drive, const TimeGrid& grid);

// ---- per-trajectory state ----

using state4 = std::array<std::complex<double>, 4>;

// Density components ordered (rho11, rho12, rho21, rho22); the spin form is
// (sx, sy, sz, tr) with sx = rho12 + rho21, sy = i(rho12 - rho21),
// sz = rho11 - rho22, tr = rho11 + rho22.  All four stay complex on a single
// trajectory; hermiticity and positivity emerge only in the ensemble mean.
state4 density_to_spins(const state4& rho);
state4 spins_to_density(const state4& spins);

state4 up_density();  // projector onto the sz = +1 state

enum class Stepper { euler_maruyama, heun };
enum class Variant { original, guided, normalised };
enum class Representation { density, spins };

struct SchemeSpec {
    Stepper stepper = Stepper::heun;
    Variant variant = Variant::original;
    Representation representation = Representation::density;
};

enum class TrajectoryStatus { ok, divergent, pathological };

// ---- imaginary-time preparation ----

struct ThermaliseOutcome {
    state4 rho{};  // density components of rho_bar at tau = beta*hbar
    TrajectoryStatus status = TrajectoryStatus::ok;
    std::size_t at_step = 0;  // first bad step when status != ok
};

// Integrates -d(rho_bar)/dtau = (H(t0) + mu(tau) sigma_z) rho_bar from the
// identity over tau in [0, beta*hbar] on the grid's tau nodes; mu holds node
// values (at least m_steps + 1 entries).  The heun stepper adds the scalar
// drift correction -(1/2) * sum_g2_mu_mu and evaluates its corrector stage
// with the next node's mu; euler_maruyama uses the plain drift.  A zero-step
// tau grid returns the identity.  Any state entry above 1e300 in magnitude
// (or non-finite) stops integration with status divergent.
ThermaliseOutcome thermalise(const SpinBosonDrive& drive,
                             const std::vector<std::complex<double>>& mu,
                             const TimeGrid& grid, const SchemeSpec& scheme,
                             double sum_g2_mu_mu = 0.0);

// ---- real-time propagation ----

struct TrajectoryOutcome {
    TrajectoryStatus status = TrajectoryStatus::ok;
    std::size_t at_step = 0;  // first bad step when status != ok
    // Node series of the spin components and trace, n_steps + 1 entries each.
    // On early stop the remaining entries are zero: a pathological node is
    // still recorded, a divergent one is not.
    std::vector<std::complex<double>> sx, sy, sz, tr;
};

// Integrates the real-time stochastic Liouville-von Neumann equation
//   i d(rho)/dt = [H(t), rho] - eta(t) [sigma_z, rho] - (nu(t)/2) {sigma_z, rho}
// from rho(t0) over the grid's real nodes; eta and nu hold node values (at
// least n_steps + 1 entries).
//
// Variants: `original` uses the equation as written.  `guided` and
// `normalised` shift eta by the running memory integral
//   i * dt * sum_{j < n} k_eta_nu[n - j] * guide_j,  guide = sz / tr,
// (left rectangles; the zero-lag node is excluded) and therefore require
// k_eta_nu on the real grid; `guided` additionally replaces the
// anticommutator by {sigma_z - guide, rho}, which conserves the trajectory
// trace.  `normalised` keeps the plain anticommutator; its consumer averages
// rho / tr(rho).
//
// Steppers: euler_maruyama takes one plain-drift step per node.  heun adds
// the drift correction 2 * sum_g2_eta_eta * (0, rho12, rho21, 0) (spin image
// 2 * sum_g2_eta_eta * (sx, sy, 0, 0)) to both stages, builds the supporting
// value with an euler step, and averages the two stage derivatives; the
// corrector stage evaluates drive, noises, and memory at t + dt with the same
// noise realisation.
//
// A state entry above 1e300 in magnitude (or non-finite) marks the
// trajectory divergent; |tr| < 1e-12 at a node where a variant divides by
// the trace marks it pathological.  Both stop integration at that node.
TrajectoryOutcome propagate_trajectory(
    const SpinBosonDrive& drive, const TimeGrid& grid, const SchemeSpec& scheme,
    const std::vector<std::complex<double>>& eta,
    const std::vector<std::complex<double>>& nu,
    const std::vector<std::complex<double>>& k_eta_nu,  // may be empty: original
    double sum_g2_eta_eta, const state4& rho_t0);

// Convenience overload wiring a filter set and a synthesized realisation.
TrajectoryOutcome propagate_trajectory(const SpinBosonDrive& drive,
                                       const FilterSet& filters,
                                       const SchemeSpec& scheme,
                                       const NoiseRealisation& noise,
                                       const state4& rho_t0);

// ---- Landau-Zener references and diagnostics ----

// Asymptotic mean z-spin 2 exp(-pi delta^2 / (2 kappa)) - 1 of a sweep
// prepared in the ground state in the infinite past.  Requires kappa > 0.
double lz_limit(double delta, double kappa);

// Deterministic finite-preparation asymptote: integrates the isolated spin
// (classical RK4, step dt) from sz(t0) = +1 through the sweep, locates the
// global minimum of sz(t), and averages sz from the first local maximum
// after that minimum to t_max.  Requires t0 < 0 and dt > 0.  Throws
// std::runtime_error when sz has no interior minimum (a series flat to within
// 1e-12 counts as having none).
double modified_lz_limit(double delta, double kappa, double t0,
                         double t_max = 10.0, double dt = 1e-4);

struct Diagnostics {
    double delta_r;  // delta * (delta / omega_c)^(alpha / (1 - alpha))
    double q;        // (1 / beta_hbar) / epsilon(t_max)
};

// Requires alpha < 1; throws std::invalid_argument otherwise.
Diagnostics diagnostics(const BathSpec& bath, const SpinBosonDrive& drive,
                        const TimeGrid& grid);

}  // namespace esln
