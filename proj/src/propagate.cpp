// propagate.cpp — imaginary-time thermal preparation and real-time stochastic
// Liouville-von Neumann steppers, plus the deterministic sweep references.
#include "esln/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace esln {

namespace {

using cplx = std::complex<double>;

constexpr cplx I{0.0, 1.0};
constexpr double kOverflow = 1e300;    // magnitude treated as runaway growth
constexpr double kTraceFloor = 1e-12;  // smallest trace a variant may divide by

// True when any component has left the trusted range (covers inf and nan:
// both fail the <= comparison).
bool out_of_range(const state4& s) {
    for (const cplx& z : s) {
        if (!(std::abs(z.real()) <= kOverflow) || !(std::abs(z.imag()) <= kOverflow))
            return true;
    }
    return false;
}

// Right-hand side in density components (rho11, rho12, rho21, rho22) with the
// effective bias eeff = epsilon - 2*(eta + memory shift) already assembled;
// corr carries the two-stage drift correction 2*sum_g2_eta_eta (zero for the
// one-stage stepper), and the guided variant subtracts i*nu*guide times the
// whole state, the component form of replacing {sigma_z, rho} by
// {sigma_z - guide, rho}.
state4 rhs_density(double delta, cplx eeff, cplx nu, double corr, bool guided,
                   cplx guide, const state4& r) {
    const cplx hd{0.0, -0.5 * delta};  // -i * delta / 2
    state4 f{hd * (r[2] - r[1]) + I * nu * r[0],
             hd * (r[3] - r[0]) - I * eeff * r[1] + corr * r[1],
             hd * (r[0] - r[3]) + I * eeff * r[2] + corr * r[2],
             hd * (r[1] - r[2]) - I * nu * r[3]};
    if (guided) {
        const cplx gs = I * nu * guide;
        for (int k = 0; k < 4; ++k) f[k] -= gs * r[k];
    }
    return f;
}

// Same flow in spin components (sx, sy, sz, tr).
state4 rhs_spins(double delta, cplx eeff, cplx nu, double corr, bool guided,
                 cplx guide, const state4& s) {
    state4 f{-eeff * s[1] + corr * s[0],
             -delta * s[2] + eeff * s[0] + corr * s[1],
             delta * s[1] + I * nu * s[3],
             I * nu * s[2]};
    if (guided) {
        const cplx gs = I * nu * guide;
        for (int k = 0; k < 4; ++k) f[k] -= gs * s[k];
    }
    return f;
}

}  // namespace

// ---- drive protocol ----

SpinBosonDrive constant_drive(double delta, double epsilon0) {
    SpinBosonDrive d;
    d.delta = delta;
    d.swept = false;
    d.epsilon0 = epsilon0;
    return d;
}

SpinBosonDrive sweep_drive(double delta, double kappa) {
    SpinBosonDrive d;
    d.delta = delta;
    d.swept = true;
    d.kappa = kappa;
    return d;
}

void validate_drive(const SpinBosonDrive& drive, const TimeGrid& grid) {
    if (!std::isfinite(drive.delta))
        throw std::invalid_argument("drive: delta must be finite");
    if (!drive.swept) {
        if (!std::isfinite(drive.epsilon0))
            throw std::invalid_argument("drive: epsilon0 must be finite");
        return;
    }
    if (!std::isfinite(drive.kappa) || drive.kappa == 0.0)
        throw std::invalid_argument("drive: sweep rate kappa must be finite and nonzero");
    // a sweep must cross the bias zero inside the window so the crossing
    // physics is actually contained in [t0, t_max]
    const double e0 = drive.epsilon_at(grid.t0);
    const double e1 = drive.epsilon_at(grid.t_max);
    const bool crosses = (drive.kappa > 0.0) ? (e0 < 0.0 && e1 > 0.0)
                                             : (e0 > 0.0 && e1 < 0.0);
    if (!crosses)
        throw std::invalid_argument(
            "drive: the sweep window must straddle the bias zero (epsilon(t0) and "
            "epsilon(t_max) on opposite sides)");
}

// ---- per-trajectory state ----

state4 density_to_spins(const state4& rho) {
    return {rho[1] + rho[2], I * (rho[1] - rho[2]), rho[0] - rho[3], rho[0] + rho[3]};
}

state4 spins_to_density(const state4& spins) {
    return {0.5 * (spins[3] + spins[2]), 0.5 * (spins[0] - I * spins[1]),
            0.5 * (spins[0] + I * spins[1]), 0.5 * (spins[3] - spins[2])};
}

state4 up_density() { return {cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{0.0}}; }

// ---- imaginary-time preparation ----

ThermaliseOutcome thermalise(const SpinBosonDrive& drive, const std::vector<cplx>& mu,
                             const TimeGrid& grid, const SchemeSpec& scheme,
                             double sum_g2_mu_mu) {
    const auto m_steps = static_cast<std::size_t>(grid.m_steps);
    if (mu.size() < m_steps + 1)
        throw std::invalid_argument("thermalise: mu must hold m_steps + 1 node values");
    const bool heun = scheme.stepper == Stepper::heun;
    const double corr = heun ? -0.5 * sum_g2_mu_mu : 0.0;
    const double h = 0.5 * drive.delta;
    const double e0 = 0.5 * drive.epsilon_at(grid.t0);

    // left multiplication by -(H(t0) + mu sigma_z), plus the scalar drift
    // correction of the two-stage stepper
    const auto rhs = [&](cplx muv, const state4& r) {
        const cplx a = e0 + muv;
        state4 f{-(a * r[0] + h * r[2]), -(a * r[1] + h * r[3]),
                 -(h * r[0] - a * r[2]), -(h * r[1] - a * r[3])};
        if (corr != 0.0)
            for (int k = 0; k < 4; ++k) f[k] += corr * r[k];
        return f;
    };

    ThermaliseOutcome out;
    out.rho = {cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{1.0}};
    const double dtau = grid.dtau;
    for (std::size_t m = 0; m < m_steps; ++m) {
        const state4 f1 = rhs(mu[m], out.rho);
        if (!heun) {
            for (int k = 0; k < 4; ++k) out.rho[k] += dtau * f1[k];
        } else {
            state4 supp;
            for (int k = 0; k < 4; ++k) supp[k] = out.rho[k] + dtau * f1[k];
            const state4 f2 = rhs(mu[m + 1], supp);
            for (int k = 0; k < 4; ++k) out.rho[k] += 0.5 * dtau * (f1[k] + f2[k]);
        }
        if (out_of_range(out.rho)) {
            out.status = TrajectoryStatus::divergent;
            out.at_step = m + 1;
            break;
        }
    }
    return out;
}

// ---- real-time propagation ----

TrajectoryOutcome propagate_trajectory(const SpinBosonDrive& drive, const TimeGrid& grid,
                                       const SchemeSpec& scheme,
                                       const std::vector<cplx>& eta,
                                       const std::vector<cplx>& nu,
                                       const std::vector<cplx>& k_eta_nu,
                                       double sum_g2_eta_eta, const state4& rho_t0) {
    const auto n_steps = static_cast<std::size_t>(grid.n_steps);
    if (eta.size() < n_steps + 1)
        throw std::invalid_argument("propagate: eta must hold n_steps + 1 node values");
    if (nu.size() < n_steps + 1)
        throw std::invalid_argument("propagate: nu must hold n_steps + 1 node values");
    const bool with_memory = scheme.variant != Variant::original;
    if (with_memory && k_eta_nu.size() < n_steps + 1)
        throw std::invalid_argument(
            "propagate: the guided and normalised variants need the eta-nu memory "
            "kernel on the real grid (n_steps + 1 lag values)");
    const bool guided = scheme.variant == Variant::guided;
    const bool spins = scheme.representation == Representation::spins;
    const bool heun = scheme.stepper == Stepper::heun;
    const double corr = heun ? 2.0 * sum_g2_eta_eta : 0.0;
    const double dt = grid.dt;

    // longest lag at which the memory kernel is still above 1e-17 of its sup;
    // shorter-range history never contributes above round-off
    std::size_t support = 0;
    if (with_memory) {
        double sup = 0.0;
        for (std::size_t l = 0; l <= n_steps; ++l)
            sup = std::max(sup, std::abs(k_eta_nu[l]));
        for (std::size_t l = n_steps; l >= 1; --l) {
            if (std::abs(k_eta_nu[l]) > 1e-17 * sup) {
                support = l;
                break;
            }
        }
    }

    TrajectoryOutcome out;
    out.sx.assign(n_steps + 1, cplx{});
    out.sy.assign(n_steps + 1, cplx{});
    out.sz.assign(n_steps + 1, cplx{});
    out.tr.assign(n_steps + 1, cplx{});

    std::vector<cplx> s_hist;  // accepted guide values sz/tr, one per node
    if (with_memory) s_hist.assign(n_steps + 1, cplx{});

    state4 st = spins ? density_to_spins(rho_t0) : rho_t0;

    const auto record = [&](std::size_t n, const state4& s) {
        if (spins) {
            out.sx[n] = s[0];
            out.sy[n] = s[1];
            out.sz[n] = s[2];
            out.tr[n] = s[3];
        } else {
            out.sx[n] = s[1] + s[2];
            out.sy[n] = I * (s[1] - s[2]);
            out.sz[n] = s[0] - s[3];
            out.tr[n] = s[0] + s[3];
        }
    };
    const auto guide_of = [&](const state4& s, bool& ok) -> cplx {
        const cplx t = spins ? s[3] : s[0] + s[3];
        if (std::abs(t) < kTraceFloor) {
            ok = false;
            return cplx{};
        }
        return (spins ? s[2] : s[0] - s[3]) / t;
    };
    // i * dt * sum over past nodes of k_eta_nu[lag] * guide, left rectangles
    // with the zero-lag node excluded
    const auto shift_at = [&](std::size_t node) -> cplx {
        cplx acc{};
        const std::size_t lmax = std::min(support, node);
        for (std::size_t lag = 1; lag <= lmax; ++lag)
            acc += k_eta_nu[lag] * s_hist[node - lag];
        return I * dt * acc;
    };
    const auto rhs = [&](double delta, cplx eeff, cplx nuv, cplx guide,
                         const state4& s) {
        return spins ? rhs_spins(delta, eeff, nuv, corr, guided, guide, s)
                     : rhs_density(delta, eeff, nuv, corr, guided, guide, s);
    };

    for (std::size_t n = 0;; ++n) {
        record(n, st);
        cplx guide_n{};
        if (with_memory) {
            bool ok = true;
            guide_n = guide_of(st, ok);
            if (!ok) {
                out.status = TrajectoryStatus::pathological;
                out.at_step = n;
                break;
            }
            s_hist[n] = guide_n;
        }
        if (n == n_steps) break;

        const cplx eta_n = with_memory ? eta[n] + shift_at(n) : eta[n];
        const cplx eeff_n = drive.epsilon_at(grid.t(static_cast<int>(n))) - 2.0 * eta_n;
        const state4 f1 = rhs(drive.delta, eeff_n, nu[n], guide_n, st);

        if (!heun) {
            for (int k = 0; k < 4; ++k) st[k] += dt * f1[k];
        } else {
            state4 supp;
            for (int k = 0; k < 4; ++k) supp[k] = st[k] + dt * f1[k];
            cplx guide_s{};
            if (guided) {
                bool ok = true;
                guide_s = guide_of(supp, ok);
                if (!ok) {
                    out.status = TrajectoryStatus::pathological;
                    out.at_step = n;
                    break;
                }
            }
            // corrector stage at t + dt with the same realisation: advanced
            // drive, advanced noise nodes, and the advanced memory shift
            // (history through the accepted node n)
            const cplx eta_n1 =
                with_memory ? eta[n + 1] + shift_at(n + 1) : eta[n + 1];
            const cplx eeff_n1 =
                drive.epsilon_at(grid.t(static_cast<int>(n + 1))) - 2.0 * eta_n1;
            const state4 f2 = rhs(drive.delta, eeff_n1, nu[n + 1], guide_s, supp);
            for (int k = 0; k < 4; ++k) st[k] += 0.5 * dt * (f1[k] + f2[k]);
        }
        if (out_of_range(st)) {
            out.status = TrajectoryStatus::divergent;
            out.at_step = n + 1;  // the runaway node itself is not recorded
            break;
        }
    }
    return out;
}

TrajectoryOutcome propagate_trajectory(const SpinBosonDrive& drive,
                                       const FilterSet& filters,
                                       const SchemeSpec& scheme,
                                       const NoiseRealisation& noise,
                                       const state4& rho_t0) {
    return propagate_trajectory(drive, filters.kernels.grid, scheme, noise.eta,
                                noise.nu, filters.kernels.k_eta_nu,
                                filters.sum_g2_eta_eta, rho_t0);
}

// ---- Landau-Zener references and diagnostics ----

double lz_limit(double delta, double kappa) {
    if (!std::isfinite(delta) || !std::isfinite(kappa) || kappa <= 0.0)
        throw std::invalid_argument("lz_limit: requires finite delta and kappa > 0");
    const double pi = 3.14159265358979323846;
    return 2.0 * std::exp(-pi * delta * delta / (2.0 * kappa)) - 1.0;
}

double modified_lz_limit(double delta, double kappa, double t0, double t_max,
                         double dt) {
    if (!(t0 < 0.0))
        throw std::invalid_argument("modified_lz_limit: t0 must be negative");
    if (!(dt > 0.0) || !(t_max > t0))
        throw std::invalid_argument("modified_lz_limit: needs dt > 0 and t_max > t0");
    const auto n = static_cast<std::size_t>(std::llround((t_max - t0) / dt));
    if (n < 2)
        throw std::invalid_argument("modified_lz_limit: window too short");

    // classical RK4 on the isolated spinor i dc/dt = H(t) c from c = (1, 0)
    const auto deriv = [&](double t, const std::array<cplx, 2>& c) {
        const double e = 0.5 * kappa * t, d = 0.5 * delta;
        return std::array<cplx, 2>{-I * (e * c[0] + d * c[1]),
                                   -I * (d * c[0] - e * c[1])};
    };
    std::vector<double> sz(n + 1);
    std::array<cplx, 2> c{cplx{1.0}, cplx{0.0}};
    sz[0] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const auto k1 = deriv(t, c);
        std::array<cplx, 2> w{c[0] + 0.5 * dt * k1[0], c[1] + 0.5 * dt * k1[1]};
        const auto k2 = deriv(t + 0.5 * dt, w);
        w = {c[0] + 0.5 * dt * k2[0], c[1] + 0.5 * dt * k2[1]};
        const auto k3 = deriv(t + 0.5 * dt, w);
        w = {c[0] + dt * k3[0], c[1] + dt * k3[1]};
        const auto k4 = deriv(t + dt, w);
        for (int j = 0; j < 2; ++j)
            c[j] += (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        sz[k + 1] = std::norm(c[0]) - std::norm(c[1]);
    }

    // averaging window: from the first local maximum after the global minimum
    // of the z-spin out to the end of the integration.  A series that never
    // moves beyond round-off has no physical minimum to anchor the window.
    const auto [lo, hi] = std::minmax_element(sz.begin(), sz.end());
    if (*hi - *lo < 1e-12)
        throw std::runtime_error("modified_lz_limit: the z-spin stays flat");
    const auto i_min = static_cast<std::size_t>(lo - sz.begin());
    if (i_min == 0 || i_min == n)
        throw std::runtime_error("modified_lz_limit: the z-spin has no interior minimum");
    std::size_t i_max = i_min + 1;
    while (i_max < n && !(sz[i_max] >= sz[i_max - 1] && sz[i_max] >= sz[i_max + 1]))
        ++i_max;
    if (i_max >= n)
        throw std::runtime_error(
            "modified_lz_limit: no local maximum after the z-spin minimum");

    double sum = 0.0, comp = 0.0;  // Neumaier compensation
    for (std::size_t k = i_max; k <= n; ++k) {
        const double t = sum + sz[k];
        comp += (std::abs(sum) >= std::abs(sz[k])) ? ((sum - t) + sz[k])
                                                   : ((sz[k] - t) + sum);
        sum = t;
    }
    return (sum + comp) / static_cast<double>(n - i_max + 1);
}

Diagnostics diagnostics(const BathSpec& bath, const SpinBosonDrive& drive,
                        const TimeGrid& grid) {
    validate(bath);
    if (bath.alpha >= 1.0)
        throw std::invalid_argument(
            "diagnostics: the tunnelling renormalisation needs alpha < 1");
    Diagnostics d;
    d.delta_r = (bath.alpha == 0.0)
                    ? drive.delta
                    : drive.delta * std::pow(drive.delta / bath.omega_c,
                                             bath.alpha / (1.0 - bath.alpha));
    d.q = (1.0 / bath.beta_hbar) / drive.epsilon_at(grid.t_max);
    return d;
}

}  // namespace esln
