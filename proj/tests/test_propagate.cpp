// test_propagate.cpp — oracle checks for the imaginary-time preparation and the
// real-time stochastic Liouville-von Neumann steppers.
//
// Deterministic physics oracles come first: closed-form Gibbs states (via
// cosh/sinh of the Hamiltonian), the cosine law of free coherent oscillation,
// phase rotation of free coherences, and a high-resolution reference value for
// a swept-bias endpoint (frozen from an independent fourth-order integration at
// step 1e-4, where steps 1e-4 and 1e-5 agree to 3e-15).  Hand-computed single
// steps pin the variant algebra and the memory-shift quadrature node by node.
// The drift correction of the heun stepper is compared against a brute-force
// sum over the complete white-noise layout of the synthesized noises.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "esln/bath.hpp"
#include "esln/filters.hpp"
#include "esln/kernels.hpp"
#include "esln/noise.hpp"
#include "esln/propagate.hpp"
#include "esln/rng.hpp"

namespace {

using cplx = std::complex<double>;
using esln::BathSpec;
using esln::FilterSet;
using esln::Representation;
using esln::Rng;
using esln::SchemeSpec;
using esln::SpinBosonDrive;
using esln::state4;
using esln::Stepper;
using esln::TimeGrid;
using esln::TrajectoryOutcome;
using esln::TrajectoryStatus;
using esln::Variant;

constexpr cplx I{0.0, 1.0};

// ---- shared fixtures (same small problem as the noise suite) ----

BathSpec small_bath() { return BathSpec{0.3, 80.0, 0.1}; }

TimeGrid small_grid() { return esln::make_grid(0.0, 0.2, 1e-3, 1e-3, 0.1); }

const FilterSet& small_filters() {
    static const FilterSet fs = [] {
        esln::QuadratureSpec quad;
        quad.log2_nodes = 16;
        quad.certify = false;
        return esln::build_filters(esln::eval_kernels(small_bath(), small_grid(), quad));
    }();
    return fs;
}

SchemeSpec scheme(Stepper st, Variant va, Representation re) {
    SchemeSpec s;
    s.stepper = st;
    s.variant = va;
    s.representation = re;
    return s;
}

std::vector<cplx> zeros(std::size_t n) { return std::vector<cplx>(n, cplx{0.0, 0.0}); }

std::vector<cplx> random_noise(std::size_t n, double scale, Rng& rng) {
    std::vector<cplx> v(n);
    for (auto& z : v) z = scale * cplx{rng.gaussian(), rng.gaussian()};
    return v;
}

// Exact matrix exponential exp(-beta * (H + mu sigma_z)) for the two-level
// H = (delta/2) sigma_x + (eps/2) sigma_z, valid for complex mu:
// with A = (delta/2) sigma_x + (eps/2 + mu) sigma_z and E = 2 sqrt(det-free
// scale) = sqrt(delta^2 + (eps + 2 mu)^2), A^2 = (E/2)^2 * identity, so
// exp(-beta A) = cosh(beta E / 2) - sinh(beta E / 2) * 2 A / E.
state4 gibbs_exact(double delta, double eps, cplx mu, double beta) {
    const cplx ez = eps + 2.0 * mu;
    const cplx e = std::sqrt(delta * delta + ez * ez);
    const cplx x = 0.5 * beta * e;
    const cplx c = std::cosh(x), s = std::sinh(x);
    // components (11, 12, 21, 22) of cosh(x) I - (sinh(x)/E) (delta sx + ez sz)
    return {c - s * ez / e, -s * delta / e, -s * delta / e, c + s * ez / e};
}

double max_abs(const state4& a, const state4& b) {
    double m = 0.0;
    for (int k = 0; k < 4; ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

// ---- drive protocol ----

TEST_CASE("drive protocol evaluates constants and sweeps") {
    const SpinBosonDrive c = esln::constant_drive(2.0, -1.5);
    CHECK(c.epsilon_at(0.0) == -1.5);
    CHECK(c.epsilon_at(7.0) == -1.5);
    CHECK(c.delta == 2.0);

    const SpinBosonDrive s = esln::sweep_drive(1.0, 5.0);
    CHECK(s.epsilon_at(-10.0) == -50.0);
    CHECK(s.epsilon_at(2.0) == 10.0);

    const TimeGrid crossing = esln::make_grid(-1.0, 1.0, 1e-3, 1e-3, 1.0);
    CHECK_NOTHROW(esln::validate_drive(s, crossing));
    CHECK_NOTHROW(esln::validate_drive(c, crossing));

    // sweep windows that never cross the bias zero are rejected
    const TimeGrid late = esln::make_grid(1.0, 2.0, 1e-3, 1e-3, 1.0);
    CHECK_THROWS_AS(esln::validate_drive(s, late), std::invalid_argument);
    CHECK_NOTHROW(esln::validate_drive(c, late));

    SpinBosonDrive bad = c;
    bad.delta = std::nan("");
    CHECK_THROWS_AS(esln::validate_drive(bad, crossing), std::invalid_argument);
    SpinBosonDrive flat = esln::sweep_drive(1.0, 0.0);
    CHECK_THROWS_AS(esln::validate_drive(flat, crossing), std::invalid_argument);
}

TEST_CASE("density and spin forms interconvert exactly") {
    CHECK(esln::up_density() == state4{cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{0.0}});
    const state4 up_spins = esln::density_to_spins(esln::up_density());
    CHECK(up_spins == state4{cplx{0.0}, cplx{0.0}, cplx{1.0}, cplx{1.0}});

    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        state4 rho;
        for (auto& z : rho) z = cplx{rng.gaussian(), rng.gaussian()};
        const state4 spins = esln::density_to_spins(rho);
        CHECK(std::abs(spins[0] - (rho[1] + rho[2])) == 0.0);
        CHECK(std::abs(spins[1] - I * (rho[1] - rho[2])) == 0.0);
        CHECK(std::abs(spins[2] - (rho[0] - rho[3])) == 0.0);
        CHECK(std::abs(spins[3] - (rho[0] + rho[3])) == 0.0);
        CHECK(max_abs(esln::spins_to_density(spins), rho) < 1e-15);
        CHECK(max_abs(esln::density_to_spins(esln::spins_to_density(spins)), spins) < 1e-15);
    }
}

// ---- imaginary-time preparation ----

TEST_CASE("thermal preparation returns the identity on a zero-step grid") {
    const TimeGrid g{0.0, 0.0, 1e-3, 1e-3, 0, 0};
    const auto out = esln::thermalise(esln::constant_drive(1.0, -1.0), zeros(1), g,
                                      scheme(Stepper::heun, Variant::original,
                                             Representation::density));
    CHECK(out.status == TrajectoryStatus::ok);
    CHECK(out.rho == state4{cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{1.0}});
}

TEST_CASE("thermal preparation reproduces the gibbs state of the bare hamiltonian") {
    // delta = 1, eps = -1, beta = 1: exp(-beta H) has the mean z-spin
    // tanh(sqrt(2)/2)/sqrt(2) = 0.43052858579027381 after normalisation.
    const TimeGrid g = esln::make_grid(0.0, 0.0, 1e-3, 1e-3, 1.0);
    const auto drive = esln::constant_drive(1.0, -1.0);
    const auto mu = zeros(static_cast<std::size_t>(g.m_steps) + 1);
    const state4 exact = gibbs_exact(1.0, -1.0, cplx{0.0}, 1.0);
    const double sz_exact = std::tanh(std::sqrt(2.0) / 2.0) / std::sqrt(2.0);

    for (const Stepper st : {Stepper::heun, Stepper::euler_maruyama}) {
        const auto out = esln::thermalise(
            drive, mu, g, scheme(st, Variant::original, Representation::density));
        REQUIRE(out.status == TrajectoryStatus::ok);
        const double sz = ((out.rho[0] - out.rho[3]) / (out.rho[0] + out.rho[3])).real();
        CHECK(std::abs(sz - sz_exact) < 1e-6);
        // the one-step euler map distorts both Boltzmann weights by the same
        // scalar factor (H^2 is proportional to the identity), so its ratio
        // stays sharp while its entries drift at order dtau
        const double entry_tol = (st == Stepper::heun) ? 5e-7 : 1e-3;
        CHECK(max_abs(out.rho, exact) < entry_tol);
    }
}

TEST_CASE("thermal preparation matches the closed form under a constant complex bias") {
    const TimeGrid g = esln::make_grid(0.0, 0.0, 1e-3, 1e-4, 0.5);
    const cplx mu_val{0.3, 0.2};
    const auto mu = std::vector<cplx>(static_cast<std::size_t>(g.m_steps) + 1, mu_val);
    const auto out = esln::thermalise(
        esln::constant_drive(0.7, 0.4), mu, g,
        scheme(Stepper::heun, Variant::original, Representation::density));
    REQUIRE(out.status == TrajectoryStatus::ok);
    CHECK(max_abs(out.rho, gibbs_exact(0.7, 0.4, mu_val, 0.5)) < 1e-7);
}

TEST_CASE("thermal preparation flags runaway growth as divergent") {
    const TimeGrid g = esln::make_grid(0.0, 0.0, 1e-3, 1e-3, 1.0);
    const auto mu = std::vector<cplx>(static_cast<std::size_t>(g.m_steps) + 1, cplx{1e6, 0.0});
    const auto out = esln::thermalise(
        esln::constant_drive(1.0, -1.0), mu, g,
        scheme(Stepper::heun, Variant::original, Representation::density));
    CHECK(out.status == TrajectoryStatus::divergent);
    CHECK(out.at_step >= 1);
    CHECK(out.at_step < 200);
}

// ---- guard clauses ----

TEST_CASE("guard clauses reject short noise arrays and missing kernels") {
    const TimeGrid g = esln::make_grid(0.0, 0.01, 1e-3, 1e-3, 0.01);  // 10 steps
    const auto drive = esln::constant_drive(1.0, 0.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto sc = scheme(Stepper::heun, Variant::original, Representation::density);

    CHECK_THROWS_AS(esln::propagate_trajectory(drive, g, sc, zeros(n), zeros(n + 1), {},
                                               0.0, esln::up_density()),
                    std::invalid_argument);
    CHECK_THROWS_AS(esln::propagate_trajectory(drive, g, sc, zeros(n + 1), zeros(n), {},
                                               0.0, esln::up_density()),
                    std::invalid_argument);

    for (const Variant va : {Variant::guided, Variant::normalised}) {
        const auto vs = scheme(Stepper::heun, va, Representation::density);
        CHECK_THROWS_AS(esln::propagate_trajectory(drive, g, vs, zeros(n + 1), zeros(n + 1),
                                                   {}, 0.0, esln::up_density()),
                        std::invalid_argument);
        CHECK_THROWS_AS(esln::propagate_trajectory(drive, g, vs, zeros(n + 1), zeros(n + 1),
                                                   zeros(n), 0.0, esln::up_density()),
                        std::invalid_argument);
    }

    CHECK_THROWS_AS(esln::thermalise(drive, zeros(g.m_steps), g, sc), std::invalid_argument);
}

// ---- free dynamics oracles ----

TEST_CASE("free precession keeps populations frozen and rotates coherences") {
    const TimeGrid g = esln::make_grid(0.0, 1.0, 1e-3, 1e-3, 1.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const state4 rho0{cplx{0.3}, cplx{0.25, -0.1}, cplx{0.2, 0.05}, cplx{0.7}};
    const auto out = esln::propagate_trajectory(
        esln::constant_drive(0.0, 2.0), g,
        scheme(Stepper::heun, Variant::original, Representation::density),
        zeros(n + 1), zeros(n + 1), {}, 0.0, rho0);
    REQUIRE(out.status == TrajectoryStatus::ok);

    for (std::size_t k = 0; k <= n; k += 100) {
        // populations never move: sz and tr stay at their initial values
        CHECK(std::abs(out.sz[k] - (rho0[0] - rho0[3])) < 1e-15);
        CHECK(std::abs(out.tr[k] - (rho0[0] + rho0[3])) < 1e-15);
        // the upper coherence rotates as exp(-i eps t)
        const cplx c12 = 0.5 * (out.sx[k] - I * out.sy[k]);
        const cplx expect = rho0[1] * std::exp(cplx{0.0, -2.0 * g.t(static_cast<int>(k))});
        CHECK(std::abs(c12 - expect) < 5e-6);
    }
}

TEST_CASE("coherent oscillation matches the cosine law") {
    // delta = 1, eps = 0, started in the up state: mean z-spin follows
    // cos(delta t); the transverse component follows -sin(delta t)
    const TimeGrid g = esln::make_grid(0.0, 6.0, 1e-3, 1e-3, 1.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto drive = esln::constant_drive(1.0, 0.0);

    for (const Representation re : {Representation::density, Representation::spins}) {
        const auto out = esln::propagate_trajectory(
            drive, g, scheme(Stepper::heun, Variant::original, re), zeros(n + 1),
            zeros(n + 1), {}, 0.0, esln::up_density());
        REQUIRE(out.status == TrajectoryStatus::ok);
        double err_z = 0.0, err_y = 0.0, err_tr = 0.0, err_im = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = g.t(static_cast<int>(k));
            err_z = std::max(err_z, std::abs(out.sz[k].real() - std::cos(t)));
            err_y = std::max(err_y, std::abs(out.sy[k].real() + std::sin(t)));
            err_tr = std::max(err_tr, std::abs(out.tr[k] - cplx{1.0}));
            err_im = std::max(err_im, std::abs(out.sz[k].imag()));
        }
        CHECK(err_z < 1e-4);
        CHECK(err_y < 1e-4);
        CHECK(err_tr < 1e-12);
        CHECK(err_im < 1e-12);
    }
}

TEST_CASE("swept-bias endpoint converges at second order to the reference") {
    // delta = 1, eps(t) = 2t over [0, 1] from the up state.  Reference value
    // from an independent fourth-order integration (0.5800937666125512); the
    // two-stage stepper must show second-order convergence against it, which
    // also pins the corrector stage to the advanced drive time t + dt.
    const double ref = 0.5800937666125512;
    const auto drive = esln::sweep_drive(1.0, 2.0);
    double err[2];
    int idx = 0;
    for (const double dt : {2e-3, 1e-3}) {
        const TimeGrid g = esln::make_grid(0.0, 1.0, dt, 1e-3, 1.0);
        const auto n = static_cast<std::size_t>(g.n_steps);
        const auto out = esln::propagate_trajectory(
            drive, g, scheme(Stepper::heun, Variant::original, Representation::density),
            zeros(n + 1), zeros(n + 1), {}, 0.0, esln::up_density());
        REQUIRE(out.status == TrajectoryStatus::ok);
        err[idx++] = std::abs(out.sz[n].real() - ref);
    }
    CHECK(err[1] < 5e-6);
    const double ratio = err[0] / err[1];
    CHECK(ratio > 3.2);
    CHECK(ratio < 4.8);
}

TEST_CASE("trace stays inert without the trace-coupling noise") {
    Rng rng(314);
    const TimeGrid g = esln::make_grid(0.0, 2.0, 1e-3, 1e-3, 1.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto eta = random_noise(n + 1, 0.8, rng);
    const state4 rho0{cplx{0.6}, cplx{0.2, 0.1}, cplx{0.2, -0.1}, cplx{0.4}};
    const auto out = esln::propagate_trajectory(
        esln::constant_drive(1.0, -1.0), g,
        scheme(Stepper::heun, Variant::original, Representation::density), eta,
        zeros(n + 1), {}, 0.0, rho0);
    REQUIRE(out.status == TrajectoryStatus::ok);
    double drift = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
        drift = std::max(drift, std::abs(out.tr[k] - out.tr[0]));
    CHECK(drift < 1e-12);
}

// ---- variant algebra ----

TEST_CASE("guided variant: hand-checked single euler step") {
    // nu = i, eta = 0, delta = 0, guide s = sz/tr = 0.4:
    // d rho11 = dt * i*nu*(1 - s)*rho11 = -dt * 0.6 * 0.7 = -4.2e-4
    // d rho22 = dt * (-i*nu)*(1 + s)*rho22 = +dt * 1.4 * 0.3 = +4.2e-4
    const TimeGrid g = esln::make_grid(0.0, 1e-3, 1e-3, 1e-3, 1.0);
    const state4 rho0{cplx{0.7}, cplx{0.0}, cplx{0.0}, cplx{0.3}};
    const auto nu = std::vector<cplx>(2, I);
    const auto out = esln::propagate_trajectory(
        esln::constant_drive(0.0, 0.0), g,
        scheme(Stepper::euler_maruyama, Variant::guided, Representation::density),
        zeros(2), nu, zeros(2), 0.0, rho0);
    REQUIRE(out.status == TrajectoryStatus::ok);
    CHECK(std::abs(out.sz[0] - cplx{0.4}) < 1e-15);
    CHECK(std::abs(out.tr[0] - cplx{1.0}) < 1e-15);
    const cplx rho11 = 0.5 * (out.tr[1] + out.sz[1]);
    const cplx rho22 = 0.5 * (out.tr[1] - out.sz[1]);
    CHECK(std::abs(rho11 - cplx{0.69958}) < 1e-15);
    CHECK(std::abs(rho22 - cplx{0.30042}) < 1e-15);
    CHECK(std::abs(out.tr[1] - cplx{1.0}) < 1e-15);
}

TEST_CASE("guided variant reduces to the original when the memory vanishes") {
    // zero memory kernel and zero trace-coupling noise: the guide terms are
    // exactly zero and every node must agree bit for bit
    Rng rng(77);
    const TimeGrid g = esln::make_grid(0.0, 1.0, 1e-3, 1e-3, 1.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto eta = random_noise(n + 1, 0.7, rng);
    const auto drive = esln::constant_drive(1.0, -1.0);
    const state4 rho0 = esln::up_density();

    for (const Stepper st : {Stepper::heun, Stepper::euler_maruyama}) {
        const auto base = esln::propagate_trajectory(
            drive, g, scheme(st, Variant::original, Representation::density), eta,
            zeros(n + 1), {}, 2e-2, rho0);
        const auto guided = esln::propagate_trajectory(
            drive, g, scheme(st, Variant::guided, Representation::density), eta,
            zeros(n + 1), zeros(n + 1), 2e-2, rho0);
        REQUIRE(base.status == TrajectoryStatus::ok);
        REQUIRE(guided.status == TrajectoryStatus::ok);
        bool same = true;
        for (std::size_t k = 0; k <= n; ++k)
            same = same && base.sx[k] == guided.sx[k] && base.sy[k] == guided.sy[k] &&
                   base.sz[k] == guided.sz[k] && base.tr[k] == guided.tr[k];
        CHECK(same);
    }
}

TEST_CASE("normalised variant reduces to the original when the memory vanishes") {
    // zero memory kernel with live nu: the shifted noise falls back to the
    // plain one, so the trajectories agree bit for bit
    Rng rng(78);
    const TimeGrid g = esln::make_grid(0.0, 1.0, 1e-3, 1e-3, 1.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto eta = random_noise(n + 1, 0.7, rng);
    const auto nu = random_noise(n + 1, 0.4, rng);
    const auto drive = esln::constant_drive(1.0, -1.0);

    const auto base = esln::propagate_trajectory(
        drive, g, scheme(Stepper::heun, Variant::original, Representation::density), eta,
        nu, {}, 2e-2, esln::up_density());
    const auto norm = esln::propagate_trajectory(
        drive, g, scheme(Stepper::heun, Variant::normalised, Representation::density), eta,
        nu, zeros(n + 1), 2e-2, esln::up_density());
    REQUIRE(base.status == TrajectoryStatus::ok);
    REQUIRE(norm.status == TrajectoryStatus::ok);
    bool same = true;
    for (std::size_t k = 0; k <= n; ++k)
        same = same && base.sx[k] == norm.sx[k] && base.sy[k] == norm.sy[k] &&
               base.sz[k] == norm.sz[k] && base.tr[k] == norm.tr[k];
    CHECK(same);
}

TEST_CASE("normalised trace follows the plain anticommutator law") {
    // one euler step with nu = i from the up state: d tr = dt * i*nu*sz = -dt
    const TimeGrid g = esln::make_grid(0.0, 1e-3, 1e-3, 1e-3, 1.0);
    const auto nu = std::vector<cplx>(2, I);
    const auto out = esln::propagate_trajectory(
        esln::constant_drive(0.0, 0.0), g,
        scheme(Stepper::euler_maruyama, Variant::normalised, Representation::density),
        zeros(2), nu, zeros(2), 0.0, esln::up_density());
    REQUIRE(out.status == TrajectoryStatus::ok);
    CHECK(std::abs(out.tr[1] - cplx{0.999}) < 1e-16);
    CHECK(std::abs(out.sz[1] - cplx{0.999}) < 1e-16);
}

TEST_CASE("memory shift follows the left-rectangle rule") {
    // delta = eps = nu = eta = 0 freezes the diagonal, so the guide s = 0.6 is
    // constant and only the shifted noise moves the coherences:
    //   shift(n) = i dt sum_{j<n} k[n-j] s,  zero-lag node excluded
    //   rho12(n+1) = rho12(n) (1 + 2 i dt shift(n))
    // The zero-lag tap is set to a large decoy value: it must never be read.
    const TimeGrid g = esln::make_grid(0.0, 3e-3, 1e-3, 1e-3, 1.0);
    const std::vector<cplx> k{cplx{0.7}, cplx{0.0, -0.1}, cplx{0.0, -0.05}, cplx{0.0, -0.02}};
    const state4 rho0{cplx{0.8}, cplx{0.5}, cplx{0.5}, cplx{0.2}};
    constexpr double dt = 1e-3, s = 0.6;

    const cplx shift1 = I * dt * (k[1] * s);
    const cplx shift2 = I * dt * (k[1] * s + k[2] * s);
    const cplx rho12_3 = 0.5 * (1.0 + 2.0 * I * dt * shift1) * (1.0 + 2.0 * I * dt * shift2);
    const cplx rho21_3 = 0.5 * (1.0 - 2.0 * I * dt * shift1) * (1.0 - 2.0 * I * dt * shift2);

    TrajectoryOutcome got[2];
    int idx = 0;
    for (const Variant va : {Variant::normalised, Variant::guided}) {
        const auto out = esln::propagate_trajectory(
            esln::constant_drive(0.0, 0.0), g,
            scheme(Stepper::euler_maruyama, va, Representation::density), zeros(4),
            zeros(4), k, 0.0, rho0);
        REQUIRE(out.status == TrajectoryStatus::ok);
        CHECK(std::abs(0.5 * (out.sx[3] - I * out.sy[3]) - rho12_3) < 1e-15);
        CHECK(std::abs(0.5 * (out.sx[3] + I * out.sy[3]) - rho21_3) < 1e-15);
        CHECK(std::abs(out.sz[3] - cplx{0.6}) < 1e-15);
        got[idx++] = out;
    }
    // with nu = 0 the two variants share the whole arithmetic path
    bool same = true;
    for (std::size_t n = 0; n < 4; ++n)
        same = same && got[0].sx[n] == got[1].sx[n] && got[0].sy[n] == got[1].sy[n];
    CHECK(same);
}

// ---- failure surfacing ----

TEST_CASE("vanishing trace is flagged pathological, not suppressed") {
    // nu = i with everything else off: tr(n) = 0.9^n under euler steps of 0.1;
    // the trace crosses the 1e-12 division floor at node 263
    const TimeGrid g = esln::make_grid(0.0, 30.0, 0.1, 0.1, 1.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto nu = std::vector<cplx>(n + 1, I);
    const auto out = esln::propagate_trajectory(
        esln::constant_drive(0.0, 0.0), g,
        scheme(Stepper::euler_maruyama, Variant::normalised, Representation::density),
        zeros(n + 1), nu, zeros(n + 1), 0.0, esln::up_density());
    CHECK(out.status == TrajectoryStatus::pathological);
    CHECK(out.at_step >= 255);
    CHECK(out.at_step <= 270);
    const auto last = out.at_step;
    CHECK(std::abs(out.tr[last]) < 1e-12);
    CHECK(std::abs(out.tr[last]) > 0.0);           // the bad node is still recorded
    CHECK(std::abs(out.tr[last - 1]) >= 1e-12);    // and it is the first bad one
    if (last + 1 <= n) CHECK(out.tr[last + 1] == cplx{0.0});
}

TEST_CASE("runaway real-time states are flagged divergent") {
    const TimeGrid g = esln::make_grid(0.0, 0.1, 1e-3, 1e-3, 0.1);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto eta = std::vector<cplx>(n + 1, cplx{1e160, 0.0});
    const state4 rho0{cplx{0.5}, cplx{0.3}, cplx{0.3}, cplx{0.5}};
    const auto out = esln::propagate_trajectory(
        esln::constant_drive(1.0, 0.0), g,
        scheme(Stepper::heun, Variant::original, Representation::density), eta,
        zeros(n + 1), {}, 0.0, rho0);
    CHECK(out.status == TrajectoryStatus::divergent);
    CHECK(out.at_step >= 1);
    CHECK(out.at_step <= 3);
}

// ---- representations and wiring ----

TEST_CASE("density and spin propagation agree on one realisation") {
    Rng rng(500);
    const TimeGrid g = esln::make_grid(0.0, 1.0, 1e-3, 1e-3, 1.0);
    const auto n = static_cast<std::size_t>(g.n_steps);
    const auto eta = random_noise(n + 1, 0.5, rng);
    const auto nu = random_noise(n + 1, 0.3, rng);
    std::vector<cplx> k(n + 1);
    for (std::size_t l = 0; l <= n; ++l)
        k[l] = cplx{0.0, -0.3} * std::exp(-5.0 * static_cast<double>(l) * g.dt);
    const auto drive = esln::constant_drive(1.0, -1.0);
    const state4 rho0{cplx{0.6}, cplx{0.2, 0.1}, cplx{0.2, -0.1}, cplx{0.4}};

    for (const Variant va : {Variant::original, Variant::guided, Variant::normalised}) {
        const auto d = esln::propagate_trajectory(
            drive, g, scheme(Stepper::heun, va, Representation::density), eta, nu, k,
            2e-2, rho0);
        const auto s = esln::propagate_trajectory(
            drive, g, scheme(Stepper::heun, va, Representation::spins), eta, nu, k,
            2e-2, rho0);
        REQUIRE(d.status == TrajectoryStatus::ok);
        REQUIRE(s.status == TrajectoryStatus::ok);
        double diff = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            diff = std::max(diff, std::abs(d.sx[j] - s.sx[j]));
            diff = std::max(diff, std::abs(d.sy[j] - s.sy[j]));
            diff = std::max(diff, std::abs(d.sz[j] - s.sz[j]));
            diff = std::max(diff, std::abs(d.tr[j] - s.tr[j]));
        }
        CHECK(diff < 1e-9);
    }
}

TEST_CASE("filter-wired overload reproduces the explicit-array call") {
    const FilterSet& fs = small_filters();
    Rng rng(5);
    const esln::NoiseRealisation noise = esln::synthesize(fs, esln::ScalingSpec{}, rng);
    const auto sc = scheme(Stepper::heun, Variant::guided, Representation::density);
    const auto drive = esln::constant_drive(1.0, -1.0);

    const auto a = esln::propagate_trajectory(drive, fs, sc, noise, esln::up_density());
    const auto b = esln::propagate_trajectory(drive, fs.kernels.grid, sc, noise.eta,
                                              noise.nu, fs.kernels.k_eta_nu,
                                              fs.sum_g2_eta_eta, esln::up_density());
    REQUIRE(a.status == TrajectoryStatus::ok);
    REQUIRE(b.status == TrajectoryStatus::ok);
    bool same = true;
    const auto n = static_cast<std::size_t>(fs.kernels.grid.n_steps);
    for (std::size_t k = 0; k <= n; ++k)
        same = same && a.sx[k] == b.sx[k] && a.sy[k] == b.sy[k] && a.sz[k] == b.sz[k] &&
               a.tr[k] == b.tr[k];
    CHECK(same);
}

// ---- drift correction against the complete noise layout ----

TEST_CASE("drift correction matches the brute-force white-noise sum") {
    // The two-stage stepper adds 2 * sum_g2_eta_eta * (0, rho12, rho21, 0) to
    // the drift.  Brute force over the complete white-noise layout of the
    // synthesized noises: for every white stream of the realisation, build the
    // state-coupling coefficient B (through b_eta and/or b_nu), and accumulate
    // -(1/2) sum_l B^l dB^k/drho^l.  The eta-eta taps must reproduce the
    // implemented correction; the mixed eta-nu/nu-eta pairs and the thermal
    // cross taps cancel in conjugate pairs; the z-spin and trace rows vanish.
    const FilterSet& fs = small_filters();
    const TimeGrid& g = fs.kernels.grid;
    const double wratio = g.dt / g.dtau;

    // b_eta = 2i (0, rho12, -rho21, 0), b_nu = i (rho11, 0, 0, -rho22); both
    // have diagonal derivative matrices, collected here as 4-vectors
    const std::array<cplx, 4> d_eta{cplx{0.0}, 2.0 * I, -2.0 * I, cplx{0.0}};
    const std::array<cplx, 4> d_nu{I, cplx{0.0}, cplx{0.0}, -I};

    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        state4 rho;
        for (auto& z : rho) z = cplx{rng.gaussian(), rng.gaussian()};
        const std::array<cplx, 4> b_eta{cplx{0.0}, 2.0 * I * rho[1], -2.0 * I * rho[2],
                                        cplx{0.0}};
        const std::array<cplx, 4> b_nu{I * rho[0], cplx{0.0}, cplx{0.0}, -I * rho[3]};

        state4 brute{};
        std::array<double, 4> scale{};
        const auto add_family = [&](cplx ce, cplx cn) {
            for (int kk = 0; kk < 4; ++kk) {
                const cplx b = ce * b_eta[kk] + cn * b_nu[kk];
                const cplx db = ce * d_eta[kk] + cn * d_nu[kk];
                brute[kk] -= 0.5 * b * db;
                scale[kk] += 0.5 * std::abs(b) * std::abs(db);
            }
        };
        for (std::size_t q = 0; q < fs.p_re; ++q) {
            add_family(cplx{fs.g_eta_eta[q]}, cplx{0.0});
            add_family(fs.g_eta_nu[q], I * fs.g_nu_eta[q]);
            add_family(I * fs.g_eta_nu[q], fs.g_nu_eta[q]);
        }
        for (int m = 0; m < g.m_steps; ++m) {
            const cplx ge = fs.g_eta_mu(3, m) * wratio;
            add_family(ge, cplx{0.0});
            add_family(I * ge, cplx{0.0});
        }

        const state4 implemented{cplx{0.0}, 2.0 * fs.sum_g2_eta_eta * rho[1],
                                 2.0 * fs.sum_g2_eta_eta * rho[2], cplx{0.0}};
        for (int kk = 0; kk < 4; ++kk)
            CHECK(std::abs(brute[kk] - implemented[kk]) < 1e-12 * scale[kk] + 1e-16);

        // spin image: transverse rows scale, z-spin and trace rows vanish
        const cplx s_x = brute[1] + brute[2], s_y = I * (brute[1] - brute[2]);
        const cplx s_z = brute[0] - brute[3], s_tr = brute[0] + brute[3];
        const double od_scale = scale[1] + scale[2], diag_scale = scale[0] + scale[3];
        CHECK(std::abs(s_x - 2.0 * fs.sum_g2_eta_eta * (rho[1] + rho[2])) <
              1e-12 * od_scale + 1e-16);
        CHECK(std::abs(s_y - 2.0 * fs.sum_g2_eta_eta * I * (rho[1] - rho[2])) <
              1e-12 * od_scale + 1e-16);
        CHECK(std::abs(s_z) < 1e-12 * diag_scale + 1e-16);
        CHECK(std::abs(s_tr) < 1e-12 * diag_scale + 1e-16);
    }
}

// ---- asymptotic references and diagnostics ----

TEST_CASE("landau-zener closed-form limit") {
    CHECK(std::abs(esln::lz_limit(1.0, 5.0) - 0.46080538209729127) < 1e-15);
    CHECK(esln::lz_limit(1.0, 1e12) > 1.0 - 1e-10);   // sudden sweep keeps the spin up
    CHECK(esln::lz_limit(2.0, 1e-3) == -1.0);         // adiabatic sweep inverts it
    CHECK_THROWS_AS(esln::lz_limit(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(esln::lz_limit(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("finite-preparation asymptote matches the reference integrator") {
    // frozen from the independent fourth-order reference at the same step:
    // delta = 1, kappa = 5, t0 = -10, averaged from the first maximum after
    // the global minimum of the z-spin out to t_max = 10
    const double a = esln::modified_lz_limit(1.0, 5.0, -10.0);
    CHECK(std::abs(a - 0.477848248578) < 1e-8);
    CHECK(esln::modified_lz_limit(1.0, 5.0, -10.0) == a);  // bit-identical rerun

    CHECK_THROWS_AS(esln::modified_lz_limit(1.0, 5.0, 0.5), std::invalid_argument);
    // a flat drive has no interior minimum to anchor the window
    CHECK_THROWS_AS(esln::modified_lz_limit(0.0, 5.0, -10.0), std::runtime_error);
}

TEST_CASE("finite-preparation asymptote: sign structure and decay of the deviation") {
    // the deviation from the closed-form limit alternates in sign with the
    // preparation time and its envelope decays towards zero
    const double limit = esln::lz_limit(1.0, 5.0);
    const double d5 = esln::modified_lz_limit(1.0, 5.0, -5.0) - limit;
    const double d10 = esln::modified_lz_limit(1.0, 5.0, -10.0) - limit;
    const double d10b = esln::modified_lz_limit(1.0, 5.0, -10.06) - limit;
    const double d20 = esln::modified_lz_limit(1.0, 5.0, -20.0) - limit;
    const double d40 = esln::modified_lz_limit(1.0, 5.0, -40.0) - limit;

    CHECK(d5 > 0.0);
    CHECK(d10 > 0.0);
    CHECK(d10b < 0.0);  // a quarter-period later the deviation flips sign
    CHECK(d20 < 0.0);
    CHECK(d40 > 0.0);
    CHECK(std::abs(d10) < std::abs(d5));
    CHECK(std::abs(d20) < std::abs(d10));
    CHECK(std::abs(d40) < std::abs(d20));
    CHECK(std::abs(d40) < 2e-3);
}

TEST_CASE("coupling diagnostics") {
    const TimeGrid g = esln::make_grid(-10.0, 10.0, 1e-3, 1e-3, 0.1);

    // renormalised tunnelling 1 * (1/20)^(0.05/0.95) = 20^(-1/19)
    const auto d1 = esln::diagnostics(BathSpec{0.05, 20.0, 0.1},
                                      esln::sweep_drive(1.0, 5.0), g);
    CHECK(std::abs(d1.delta_r - 0.85413149668775656) < 1e-12);
    CHECK(std::abs(d1.q - 0.2) < 1e-15);  // (1/0.1) / (5 * 10) = 0.2

    const auto d2 = esln::diagnostics(BathSpec{0.0, 20.0, 0.1},
                                      esln::sweep_drive(1.0, 5.0), g);
    CHECK(d2.delta_r == 1.0);  // decoupled: no renormalisation at all

    const TimeGrid gc = esln::make_grid(0.0, 6.0, 1e-3, 1e-3, 0.5);
    const auto d3 = esln::diagnostics(BathSpec{0.1, 20.0, 0.5},
                                      esln::constant_drive(1.0, 4.0), gc);
    CHECK(std::abs(d3.q - 0.5) < 1e-15);  // (1/0.5) / 4

    CHECK_THROWS_AS(esln::diagnostics(BathSpec{1.0, 20.0, 1.0},
                                      esln::constant_drive(1.0, 1.0), gc),
                    std::invalid_argument);
    CHECK_THROWS_AS(esln::diagnostics(BathSpec{1.2, 20.0, 1.0},
                                      esln::constant_drive(1.0, 1.0), gc),
                    std::invalid_argument);
}

}  // namespace
