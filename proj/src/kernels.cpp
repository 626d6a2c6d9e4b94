// kernels.cpp — FFT trapezoid quadrature with Euler-Maclaurin endpoint
// corrections and analytic high-frequency tails.
//
// Every kernel is an integral over omega in [0, inf).  The finite part
// [0, Omega] with Omega = 2*pi/dt is handled by one length-Q FFT per kernel
// family (the uniform grid makes every lag's phase land on a DFT bin, and
// exp(-i*Omega*t_n) = 1 exactly), corrected at both endpoints through the
// Euler-Maclaurin terms in dw^2 and dw^4.  The remainder over [Omega, inf)
// uses the asymptotic expansion of the spectral density, J(w)/pi =
// sum_k c_k w^{-(3+2k)}, against exact exponential-integral tails.  A
// resolution-doubling certificate bounds everything that is left.
#include "esln/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "esln/expint.hpp"
#include "esln/fft.hpp"

namespace esln {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kTailOrders = 5;  // J/pi expansion truncated after w^{-11}
using cplx = std::complex<double>;

// ---- value-plus-three-derivatives algebra for endpoint corrections ----

struct D3 {
    double f = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
};

D3 mul(const D3& a, const D3& b) {
    return {a.f * b.f,
            a.d1 * b.f + a.f * b.d1,
            a.d2 * b.f + 2.0 * a.d1 * b.d1 + a.f * b.d2,
            a.d3 * b.f + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.f * b.d3};
}

D3 add(const D3& a, const D3& b) {
    return {a.f + b.f, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3};
}

D3 recip(const D3& a) {
    const double r = 1.0 / a.f;
    const double r2 = r * r;
    return {r, -a.d1 * r2, (2.0 * a.d1 * a.d1 - a.f * a.d2) * r2 * r,
            (-6.0 * a.d1 * a.d1 * a.d1 + 6.0 * a.f * a.d1 * a.d2 - a.f * a.f * a.d3) * r2 * r2};
}

// e^{rate*omega} with derivatives in omega.
D3 expo(double rate, double omega) {
    const double v = std::exp(rate * omega);
    return {v, rate * v, rate * rate * v, rate * rate * rate * v};
}

// J(omega)/pi with derivatives.
D3 j_over_pi_d3(const BathSpec& b, double omega) {
    const double iw = 1.0 / b.omega_c;
    const D3 x{omega * iw, iw, 0.0, 0.0};
    const D3 s = add(mul(x, x), {1.0, 0.0, 0.0, 0.0});
    const D3 is = recip(s);
    return mul({b.alpha * omega / kPi, b.alpha / kPi, 0.0, 0.0}, mul(is, is));
}

// 1/(1 - e^{-beta*omega}) = 1 + n(omega) with derivatives, omega > 0.
D3 bose_np1_d3(double beta, double omega) {
    const double e = std::exp(-beta * omega);
    const double n = e / (1.0 - e);
    const double n1 = -n * (1.0 + n);
    const double n2 = n * (1.0 + n) * (1.0 + 2.0 * n);
    const double n3 = -n * (1.0 + n) * (1.0 + 6.0 * n + 6.0 * n * n);
    const double b2 = beta * beta;
    return {1.0 + n, beta * n1, b2 * n2, b2 * beta * n3};
}

// coth(beta*omega/2) with derivatives, omega > 0.
D3 coth_d3(double beta, double omega) {
    const double hb = 0.5 * beta;
    const double c = 1.0 + 2.0 / std::expm1(2.0 * hb * omega);
    const double c1 = 1.0 - c * c;
    const double c2 = -2.0 * c * c1;
    const double c3 = -2.0 * (c1 * c1 + c * c2);
    return {c, hb * c1, hb * hb * c2, hb * hb * hb * c3};
}

// Leading Taylor data at omega = 0, where the integrands are finite but the
// sampled factorizations 1/(1-e^{-beta w}) and coth(beta w/2) are not.
// J*coth/pi  = (2a/pi) [1/beta + w^2 (beta/12 - 2/(beta wc^2))] + O(w^4)
// J*(1+n)/pi = (a/pi) [1/beta + w/2 + w^2 (beta/12 - 2/(beta wc^2)) - w^3/wc^2] + O(w^4)
D3 sym_origin_d3(const BathSpec& b) {
    const double a = b.alpha / kPi, beta = b.beta_hbar, wc2 = b.omega_c * b.omega_c;
    return {2.0 * a / beta, 0.0, 2.0 * a * (beta / 6.0 - 4.0 / (beta * wc2)), 0.0};
}

D3 jnp1_origin_d3(const BathSpec& b) {
    const double a = b.alpha / kPi, beta = b.beta_hbar, wc2 = b.omega_c * b.omega_c;
    return {a / beta, 0.5 * a, a * (beta / 6.0 - 4.0 / (beta * wc2)), -6.0 * a / wc2};
}

// J/pi = (a/pi)(w - 2 w^3/wc^2) + O(w^5)
D3 resp_origin_d3(const BathSpec& b) {
    const double a = b.alpha / kPi;
    return {0.0, a, 0.0, -12.0 * a / (b.omega_c * b.omega_c)};
}

// ---- Euler-Maclaurin endpoint corrections ----

// For the integral of f(w) e^{sign*i*w*t} over [0, Omega] where the phase is
// exactly 1 at both endpoints:
//   -dw^2/12 [g'] + dw^4/720 [g'''],  g^(k) built from f's derivatives.
cplx em_phase(const D3& at0, const D3& atW, double t, double dw, int sign) {
    const cplx it(0.0, sign * t);
    const cplx it2 = it * it, it3 = it2 * it;
    auto gp = [&](const D3& f) { return cplx(f.d1, 0.0) + it * f.f; };
    auto g3 = [&](const D3& f) {
        return cplx(f.d3, 0.0) + 3.0 * it * f.d2 + 3.0 * it2 * f.d1 + it3 * f.f;
    };
    const double w2 = dw * dw;
    return -w2 / 12.0 * (gp(atW) - gp(at0)) + w2 * w2 / 720.0 * (g3(atW) - g3(at0));
}

double em_real(const D3& at0, const D3& atW, double dw) {
    const double w2 = dw * dw;
    return -w2 / 12.0 * (atW.d1 - at0.d1) + w2 * w2 / 720.0 * (atW.d3 - at0.d3);
}

// ---- analytic tails over [Omega, inf) ----

// Tail coefficients of J/pi: c_k = (alpha wc^4/pi) (-1)^k (k+1) wc^{2k},
// powers s_k = 3 + 2k.
struct TailCoeffs {
    double c[kTailOrders];
    double w_pow[kTailOrders];  // Omega^{1-s_k}
};

TailCoeffs make_tail_coeffs(const BathSpec& b, double omega_max) {
    TailCoeffs tc{};
    const double wc2 = b.omega_c * b.omega_c;
    double c = b.alpha * wc2 * wc2 / kPi;
    double wp = 1.0 / (omega_max * omega_max);
    for (int k = 0; k < kTailOrders; ++k) {
        tc.c[k] = c * (k % 2 == 0 ? 1.0 : -1.0) * (k + 1);
        tc.w_pow[k] = wp;
        c *= wc2;
        wp /= omega_max * omega_max;
    }
    return tc;
}

// integral_Omega^inf (J/pi) e^{-w*x} e^{sign*i*w*t} dw for x >= 0 and t an
// exact multiple of 2*pi/Omega, so the phase factor at the boundary is 1 and
// e^{-Omega*zeta} reduces to the real e^{-Omega*x}.
cplx tail_integral(const TailCoeffs& tc, double omega_max, double x, double t, int sign) {
    const double xw = omega_max * x;
    if (xw > 746.0) return 0.0;  // e^{-xw} underflows; the tail is dead
    const double damp = std::exp(-xw);
    // e^{sign i w t} = e^{-w (x - sign*i*t)} / e^{-w x}, so the argument of the
    // exponential integral is Omega*(x - sign*i*t)
    const cplx z(xw, -sign * omega_max * t);
    cplx acc(0.0, 0.0);
    for (int k = 0; k < kTailOrders; ++k) {
        acc += tc.c[k] * tc.w_pow[k] * expint_e_scaled(3 + 2 * k, z);
    }
    return damp * acc;
}

// ---- compensated summation ----

struct Neumaier {
    double sum = 0.0, comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + comp; }
};

// ---- raw single-resolution build ----

struct RawTables {
    std::vector<double> k_eta_eta;
    std::vector<cplx> k_eta_nu;
    std::vector<double> k_mu_mu;
    std::vector<cplx> k_eta_mu;
    std::vector<double> ext_eta_eta;
    std::vector<cplx> ext_eta_nu;
};

// Number of extra exponential images e^{-r*beta*omega} that still matter at
// the cutoff (all others are below e^{-46} there).
int image_count(double omega_max, double beta) {
    return static_cast<int>(46.0 / (omega_max * beta));
}

RawTables build_tables(const BathSpec& b, const TimeGrid& g, int log2q, bool with_thermal,
                       std::size_t ext_len) {
    const std::size_t q = std::size_t{1} << log2q;
    const double omega_max = 2.0 * kPi / g.dt;
    const double dw = omega_max / static_cast<double>(q);
    const double beta = b.beta_hbar;
    const std::size_t n_len = static_cast<std::size_t>(g.n_steps) + 1;
    const std::size_t m_len = static_cast<std::size_t>(g.m_steps) + 1;
    const int images = image_count(omega_max, beta);

    // node tables shared by every kernel
    std::vector<double> jp(q + 1), coth_v(q + 1), np1_v(q + 1), jpn(q + 1);
    for (std::size_t j = 1; j <= q; ++j) {
        const double w = dw * static_cast<double>(j);
        const double x = w / b.omega_c;
        const double d = 1.0 + x * x;
        jp[j] = b.alpha * w / (d * d) / kPi;
        coth_v[j] = 1.0 + 2.0 / std::expm1(beta * w);
        np1_v[j] = 1.0 / (-std::expm1(-beta * w));
        jpn[j] = jp[j] * np1_v[j];
    }

    const TailCoeffs tc = make_tail_coeffs(b, omega_max);
    const D3 jp0 = resp_origin_d3(b);
    const D3 jpW = j_over_pi_d3(b, omega_max);
    const D3 sym0 = sym_origin_d3(b);
    const D3 symW = mul(jpW, coth_d3(beta, omega_max));
    const D3 jnp1_0 = jnp1_origin_d3(b);
    const D3 jnp1_W = mul(jpW, bose_np1_d3(beta, omega_max));

    RawTables out;
    out.k_eta_eta.resize(n_len);
    out.k_eta_nu.resize(n_len);
    out.ext_eta_eta.resize(ext_len / 2 + 1);
    out.ext_eta_nu.resize(ext_len);

    // ---- pass 1: the stationary pair, one packed FFT ----
    std::vector<cplx> z(q);
    z[0] = cplx(sym0.f / 2.0, jp0.f / 2.0);
    for (std::size_t j = 1; j < q; ++j) {
        z[j] = cplx(jp[j] * coth_v[j], jp[j]);
    }
    fft_forward(z);

    const double f_sym_W = symW.f;
    const double f_resp_W = jpW.f;
    for (std::size_t p = 0; p < ext_len; ++p) {
        const double t = static_cast<double>(p) * g.dt;
        const cplx zp = z[p % q];
        const cplx zq = std::conj(z[(q - (p % q)) % q]);
        const cplx dft_sym = 0.5 * (zp + zq);
        const cplx dft_resp = cplx(0.0, -0.5) * (zp - zq);

        cplx i_sym = dw * (dft_sym + 0.5 * f_sym_W) + em_phase(sym0, symW, t, dw, -1);
        i_sym += tail_integral(tc, omega_max, 0.0, t, -1);
        for (int r = 1; r <= images; ++r) {
            i_sym += 2.0 * tail_integral(tc, omega_max, r * beta, t, -1);
        }
        cplx i_resp = dw * (dft_resp + 0.5 * f_resp_W) + em_phase(jp0, jpW, t, dw, -1);
        i_resp += tail_integral(tc, omega_max, 0.0, t, -1);

        const double k_sym = i_sym.real();
        const cplx k_resp = (p == 0) ? cplx(0.0, 0.0) : cplx(0.0, 2.0 * i_resp.imag());
        if (p <= ext_len / 2) out.ext_eta_eta[p] = k_sym;
        out.ext_eta_nu[p] = k_resp;
        if (p < n_len) {
            out.k_eta_eta[p] = k_sym;
            out.k_eta_nu[p] = k_resp;
        }
    }

    if (!with_thermal) return out;

    // ---- pass 2: thermal tables, one packed FFT per imaginary-time row ----
    out.k_mu_mu.resize(m_len);
    out.k_eta_mu.resize(n_len * m_len);
    const bool single_node = n_len == 1;  // degenerate window: plain sums, no FFT
    const int resync = 4096;
    for (std::size_t m = 0; m < m_len; ++m) {
        const double tau = g.tau(static_cast<int>(m));
        const double rate_f = -tau;
        const double rate_r = -(beta - tau);
        const double step_f = std::exp(rate_f * dw);
        const double step_r = std::exp(rate_r * dw);

        // samples: z_j = f_F + i f_R with f_F = (J/pi)(1+n)e^{-w tau},
        // f_R = (J/pi)(1+n)e^{-w(beta-tau)}; their sum integrates to the
        // imaginary-time kernel, their transforms to the cross kernel.
        z[0] = cplx(0.5 * jnp1_0.f, 0.5 * jnp1_0.f);
        Neumaier sum_f, sum_r;
        sum_f.add(z[0].real());
        sum_r.add(z[0].imag());
        double ef = 1.0, er = 1.0;
        for (std::size_t j = 1; j < q; ++j) {
            if (j % resync == 0) {
                const double w = dw * static_cast<double>(j);
                ef = std::exp(rate_f * w);
                er = std::exp(rate_r * w);
            } else {
                ef *= step_f;
                er *= step_r;
            }
            const double ff = jpn[j] * ef;
            const double fr = jpn[j] * er;
            z[j] = cplx(ff, fr);
            sum_f.add(ff);
            sum_r.add(fr);
        }
        const D3 ef_W = expo(rate_f, omega_max);
        const D3 er_W = expo(rate_r, omega_max);
        const D3 fF_W = mul(jnp1_W, ef_W);
        const D3 fR_W = mul(jnp1_W, er_W);
        const D3 fF_0 = mul(jnp1_0, expo(rate_f, 0.0));
        const D3 fR_0 = mul(jnp1_0, expo(rate_r, 0.0));

        // imaginary-time kernel: no phase, purely real assembly
        double k_mu = dw * (sum_f.value() + sum_r.value() + 0.5 * (fF_W.f + fR_W.f));
        k_mu += em_real(add(fF_0, fR_0), add(fF_W, fR_W), dw);
        for (int r = 0; r <= images; ++r) {
            k_mu += tail_integral(tc, omega_max, tau + r * beta, 0.0, -1).real();
            k_mu += tail_integral(tc, omega_max, (beta - tau) + r * beta, 0.0, -1).real();
        }
        out.k_mu_mu[m] = k_mu;

        if (!single_node) fft_forward(z);
        for (std::size_t n = 0; n < n_len; ++n) {
            const double t = static_cast<double>(n) * g.dt;
            cplx dft_f, dft_r;
            if (single_node) {  // n = 0: the DFT degenerates to the plain sums
                dft_f = sum_f.value();
                dft_r = sum_r.value();
            } else {
                const cplx zp = z[n];
                const cplx zq = std::conj(z[(q - n) % q]);
                dft_f = 0.5 * (zp + zq);
                dft_r = std::conj(cplx(0.0, -0.5) * (zp - zq));
            }

            cplx i_f = dw * (dft_f + 0.5 * fF_W.f) + em_phase(fF_0, fF_W, t, dw, -1);
            cplx i_r = dw * (dft_r + 0.5 * fR_W.f) + em_phase(fR_0, fR_W, t, dw, +1);
            for (int r = 0; r <= images; ++r) {
                i_f += tail_integral(tc, omega_max, tau + r * beta, t, -1);
                i_r += tail_integral(tc, omega_max, (beta - tau) + r * beta, t, +1);
            }
            out.k_eta_mu[n * m_len + m] = -(i_f + i_r);
        }
    }
    return out;
}

// sup-norm relative difference between two builds, per table, worst case.
double table_residual(const RawTables& a, const RawTables& fine) {
    auto rel_real = [](const std::vector<double>& u, const std::vector<double>& v) {
        double sup = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            sup = std::max(sup, std::abs(v[i]));
            diff = std::max(diff, std::abs(u[i] - v[i]));
        }
        return sup > 0.0 ? diff / sup : 0.0;
    };
    auto rel_cplx = [](const std::vector<cplx>& u, const std::vector<cplx>& v) {
        double sup = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            sup = std::max(sup, std::abs(v[i]));
            diff = std::max(diff, std::abs(u[i] - v[i]));
        }
        return sup > 0.0 ? diff / sup : 0.0;
    };
    double r = std::max(rel_real(a.k_eta_eta, fine.k_eta_eta),
                        rel_cplx(a.k_eta_nu, fine.k_eta_nu));
    r = std::max(r, rel_real(a.ext_eta_eta, fine.ext_eta_eta));
    r = std::max(r, rel_cplx(a.ext_eta_nu, fine.ext_eta_nu));
    r = std::max(r, rel_real(a.k_mu_mu, fine.k_mu_mu));
    r = std::max(r, rel_cplx(a.k_eta_mu, fine.k_eta_mu));
    return r;
}

}  // namespace

KernelTable eval_kernels(const BathSpec& bath, const TimeGrid& grid,
                         const QuadratureSpec& quad, bool with_thermal) {
    validate(bath);
    if (!(grid.dt > 0.0) || grid.n_steps < 0 || grid.m_steps < 1 || !(grid.dtau > 0.0)) {
        throw std::invalid_argument("eval_kernels: invalid time grid");
    }
    if (with_thermal &&
        std::abs(grid.m_steps * grid.dtau - bath.beta_hbar) > 1e-9 * bath.beta_hbar) {
        throw std::invalid_argument(
            "eval_kernels: grid imaginary span does not match beta_hbar of the bath");
    }
    const double omega_max = 2.0 * kPi / grid.dt;
    if (omega_max < 20.0 * bath.omega_c) {
        std::ostringstream msg;
        msg << "eval_kernels: frequency cutoff 2*pi/dt = " << omega_max << " is below 20*omega_c = "
            << 20.0 * bath.omega_c << "; refine dt";
        throw std::invalid_argument(msg.str());
    }
    if (quad.log2_nodes < 6 || quad.max_doublings < 0 || !(quad.certificate_tol > 0.0)) {
        throw std::invalid_argument("eval_kernels: unusable quadrature spec");
    }

    const std::size_t ext_len =
        next_pow2(2 * (2 * static_cast<std::size_t>(grid.n_steps) + 1));
    int log2q = quad.log2_nodes;
    while ((std::size_t{1} << log2q) < ext_len) ++log2q;  // circle must fit in one FFT
    if (log2q + quad.max_doublings > 24) {
        throw std::invalid_argument("eval_kernels: frequency grid would exceed 2^24 nodes");
    }

    KernelTable table;
    table.bath = bath;
    table.grid = grid;
    table.has_thermal = with_thermal;
    table.ext_len = ext_len;

    RawTables cur = build_tables(bath, grid, log2q, with_thermal, ext_len);
    if (quad.certify) {
        double residual = 0.0;
        bool ok = false;
        for (int k = 1; k <= std::max(quad.max_doublings, 1); ++k) {
            RawTables fine = build_tables(bath, grid, log2q + k, with_thermal, ext_len);
            residual = table_residual(cur, fine);
            cur = std::move(fine);
            if (residual < quad.certificate_tol) {
                table.certificate_residual = residual;
                table.log2_nodes_used = log2q + k;
                ok = true;
                break;
            }
        }
        if (!ok) {
            std::ostringstream msg;
            msg << "eval_kernels: quadrature did not converge, achieved residual " << residual
                << " after " << std::max(quad.max_doublings, 1) << " doubling(s), tolerance "
                << quad.certificate_tol;
            throw std::runtime_error(msg.str());
        }
    } else {
        table.certificate_residual = 0.0;
        table.log2_nodes_used = log2q;
    }

    table.k_eta_eta = std::move(cur.k_eta_eta);
    table.k_eta_nu = std::move(cur.k_eta_nu);
    table.k_mu_mu = std::move(cur.k_mu_mu);
    table.k_eta_mu = std::move(cur.k_eta_mu);
    table.ext_eta_eta = std::move(cur.ext_eta_eta);
    table.ext_eta_nu = std::move(cur.ext_eta_nu);
    return table;
}

}  // namespace esln
