// filters.cpp — circulant noise filters from kernel tables.
#include "esln/filters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "esln/fft.hpp"

namespace esln {

namespace {

using cplx = std::complex<double>;

// Clamps round-off negatives to zero; a bin below -1e-10 * max means the
// embedding itself is wrong (e.g. an undecayed kernel on the circle), which
// is a hard error.
void check_spectrum(std::vector<double>& hat, const char* name) {
    double max_val = 0.0;
    for (double v : hat) max_val = std::max(max_val, v);
    const double tol = 1e-10 * max_val;
    for (std::size_t k = 0; k < hat.size(); ++k) {
        if (hat[k] < -tol) {
            throw std::runtime_error(std::string(name) + " filter spectrum is negative at bin " +
                                     std::to_string(k) + " (value " + std::to_string(hat[k]) +
                                     ", max " + std::to_string(max_val) + ")");
        }
        if (hat[k] < 0.0) hat[k] = 0.0;
    }
}

}  // namespace

FilterSet build_filters(KernelTable table) {
    FilterSet fs;
    fs.kernels = std::move(table);
    const KernelTable& tab = fs.kernels;
    const int m_steps = tab.grid.m_steps;
    const double dt = tab.grid.dt;
    const double dtau = tab.grid.dtau;

    if (tab.ext_len == 0 || tab.ext_eta_eta.size() != tab.ext_len / 2 + 1 ||
        tab.ext_eta_nu.size() != tab.ext_len) {
        throw std::invalid_argument("build_filters: kernel table lacks extended lag arrays");
    }
    const std::size_t p = tab.ext_len;
    fs.p_re = p;

    // ---- eta-eta: even circle, real nonnegative spectrum, real taps ----
    std::vector<cplx> work(p);
    for (std::size_t q = 0; q < p; ++q) {
        work[q] = tab.ext_eta_eta[std::min(q, p - q)];
    }
    fft_forward(work);
    std::vector<double> hat(p);
    for (std::size_t k = 0; k < p; ++k) hat[k] = work[k].real();
    check_spectrum(hat, "eta-eta");
    fs.spectrum_eta_eta.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
        fs.spectrum_eta_eta[k] = std::sqrt(hat[k] * dt);
        work[k] = fs.spectrum_eta_eta[k];
    }
    fft_inverse(work);
    fs.g_eta_eta.resize(p);
    fs.sum_g2_eta_eta = 0.0;
    for (std::size_t q = 0; q < p; ++q) {
        fs.g_eta_eta[q] = work[q].real();
        fs.sum_g2_eta_eta += fs.g_eta_eta[q] * fs.g_eta_eta[q];
    }

    // ---- eta-nu pair: principal root of -(i/2) Khat dt; the nu-side
    // spectrum is the frequency-reversed copy, hence lag-reversed taps ----
    std::vector<cplx> work_n(tab.ext_eta_nu.begin(), tab.ext_eta_nu.end());
    fft_forward(work_n);
    fs.spectrum_eta_nu.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
        fs.spectrum_eta_nu[k] = std::sqrt(cplx(0.0, -0.5) * work_n[k] * dt);
        work_n[k] = fs.spectrum_eta_nu[k];
    }
    fft_inverse(work_n);
    fs.g_eta_nu = work_n;
    fs.g_nu_eta.resize(p);
    for (std::size_t q = 0; q < p; ++q) {
        fs.g_nu_eta[q] = fs.g_eta_nu[(p - q) % p];
    }

    // ---- thermal side ----
    if (tab.has_thermal) {
        if (tab.k_mu_mu.size() != static_cast<std::size_t>(m_steps) + 1) {
            throw std::invalid_argument("build_filters: mu-mu table size mismatch");
        }
        const std::size_t two_m = 2 * static_cast<std::size_t>(m_steps);
        const std::size_t pim = 2 * two_m;
        fs.p_im = pim;

        // fold K_mu_mu onto the circle: even, period 2M, circle length 4M
        std::vector<cplx> work_m(pim);
        for (std::size_t q = 0; q < pim; ++q) {
            const std::size_t r = q % two_m;
            work_m[q] = tab.k_mu_mu[std::min(r, two_m - r)];
        }
        fft_forward(work_m);
        std::vector<double> hat_m(pim);
        for (std::size_t k = 0; k < pim; ++k) hat_m[k] = work_m[k].real();
        check_spectrum(hat_m, "mu-mu");
        fs.spectrum_mu_mu.resize(pim);
        for (std::size_t k = 0; k < pim; ++k) {
            fs.spectrum_mu_mu[k] = std::sqrt(hat_m[k] * dtau);
            work_m[k] = fs.spectrum_mu_mu[k];
        }
        fft_inverse(work_m);
        fs.g_mu_mu.resize(pim);
        fs.sum_g2_mu_mu = 0.0;
        for (std::size_t q = 0; q < pim; ++q) {
            fs.g_mu_mu[q] = work_m[q].real();
            fs.sum_g2_mu_mu += fs.g_mu_mu[q] * fs.g_mu_mu[q];
        }

        // cross-filter row support: rows whose kernel row stays above
        // 1e-17 of the table sup contribute to eta_mu; later rows are dead
        double sup = 0.0;
        for (const cplx& v : tab.k_eta_mu) sup = std::max(sup, std::abs(v));
        const double cut = 1e-17 * sup;
        const std::size_t m_len = static_cast<std::size_t>(m_steps) + 1;
        const std::size_t n_rows = tab.k_eta_mu.size() / m_len;
        fs.eta_mu_rows = 0;
        for (std::size_t n = 0; n < n_rows; ++n) {
            double row_sup = 0.0;
            for (std::size_t m = 0; m < m_len; ++m) {
                row_sup = std::max(row_sup, std::abs(tab.k_eta_mu[n * m_len + m]));
            }
            if (row_sup > cut && sup > 0.0) {
                fs.eta_mu_rows = static_cast<int>(n) + 1;
            }
        }
    }

    return fs;
}

}  // namespace esln
