// noise.cpp — white streams, coloured-noise synthesis, amplitude rescaling.
#include "esln/noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "esln/fft.hpp"

namespace esln {

namespace {

using cplx = std::complex<double>;

void validate_scaling(const ScalingSpec& scaling) {
    if (!(scaling.r_nu_eta > 0.0) || !(scaling.r_mu_eta > 0.0)) {
        throw std::invalid_argument("scaling ratios r_nu_eta and r_mu_eta must be positive");
    }
}

double sum_abs(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& x : v) s += std::abs(x);
    return s;
}

double max_abs(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& x : v) s = std::max(s, std::abs(x));
    return s;
}

}  // namespace

std::vector<double> sample_white(Rng& rng, std::size_t count, double step) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("white stream step must be positive");
    }
    const double scale = 1.0 / std::sqrt(step);
    std::vector<double> w(count);
    for (double& x : w) x = scale * rng.gaussian();
    return w;
}

void rescale_components(NoiseRealisation& noise, const ScalingSpec& scaling) {
    validate_scaling(scaling);
    noise.b_nu_eta = 1.0;
    noise.a_mu_eta = 1.0;
    noise.nu_rescale_skipped = false;
    noise.mu_rescale_skipped = false;

    // nu pair: equalise summed amplitudes up to the requested ratio
    const double num_nu = sum_abs(noise.nu_eta);
    const double den_nu = sum_abs(noise.eta_nu);
    if (num_nu == 0.0 || den_nu == 0.0) {
        noise.nu_rescale_skipped = true;
    } else {
        const double b = std::sqrt(scaling.r_nu_eta) * std::sqrt(num_nu / den_nu);
        for (cplx& x : noise.eta_nu) x *= b;
        for (cplx& x : noise.nu_eta) x /= b;
        noise.b_nu_eta = b;
    }

    // mu pair: mean of the white member over the M+1 nodes against the peak
    // of the coloured member
    if (noise.mu_eta.empty() || noise.eta_mu.empty()) {
        noise.mu_rescale_skipped = true;
        return;
    }
    const double m_count = static_cast<double>(
        noise.mu_eta.size() > 1 ? noise.mu_eta.size() - 1 : 1);
    const double num_mu = sum_abs(noise.mu_eta) / m_count;
    const double den_mu = max_abs(noise.eta_mu);
    if (num_mu == 0.0 || den_mu == 0.0) {
        noise.mu_rescale_skipped = true;
    } else {
        const double a = std::sqrt(scaling.r_mu_eta) * std::sqrt(num_mu / den_mu);
        for (cplx& x : noise.eta_mu) x *= a;
        for (cplx& x : noise.mu_eta) x /= a;
        noise.a_mu_eta = a;
    }
}

NoiseRealisation synthesize(const FilterSet& filters, const ScalingSpec& scaling, Rng& rng) {
    validate_scaling(scaling);
    const KernelTable& tab = filters.kernels;
    const std::size_t p = filters.p_re;
    if (p == 0) {
        throw std::invalid_argument("synthesize: filter set is empty");
    }
    const std::size_t n_len = static_cast<std::size_t>(tab.grid.n_steps) + 1;
    const std::size_t m_len = static_cast<std::size_t>(tab.grid.m_steps) + 1;
    const double dt = tab.grid.dt;
    const double dtau = tab.grid.dtau;

    NoiseRealisation nz;

    // fixed draw order: x1, x2, x3 on the real-time circle
    const auto x1 = sample_white(rng, p, dt);
    const auto x2 = sample_white(rng, p, dt);
    const auto x3 = sample_white(rng, p, dt);

    // eta_eta: real spectrum times a real white stream (imaginary part is
    // transform round-off and is dropped)
    std::vector<cplx> work(p);
    for (std::size_t q = 0; q < p; ++q) work[q] = x1[q];
    fft_forward(work);
    for (std::size_t k = 0; k < p; ++k) work[k] *= filters.spectrum_eta_eta[k];
    fft_inverse(work);
    nz.eta_eta.resize(n_len);
    for (std::size_t n = 0; n < n_len; ++n) nz.eta_eta[n] = work[n].real();

    // eta_nu and nu_eta ride one transform: u = x2 + i x3 gives the eta
    // member directly, and u' = x3 + i x2 has U'_k = i conj(U_{(p-k)%p}),
    // which pairs with the frequency-reversed nu-side spectrum.
    std::vector<cplx> u(p);
    for (std::size_t q = 0; q < p; ++q) u[q] = cplx(x2[q], x3[q]);
    fft_forward(u);
    std::vector<cplx> side_a(p), side_b(p);
    for (std::size_t k = 0; k < p; ++k) {
        const std::size_t kr = (p - k) % p;
        side_a[k] = filters.spectrum_eta_nu[k] * u[k];
        side_b[k] = filters.spectrum_eta_nu[kr] * (cplx(0.0, 1.0) * std::conj(u[kr]));
    }
    fft_inverse(side_a);
    fft_inverse(side_b);
    nz.eta_nu.assign(side_a.begin(), side_a.begin() + n_len);
    nz.nu_eta.assign(side_b.begin(), side_b.begin() + n_len);

    nz.eta_mu.assign(n_len, cplx(0.0, 0.0));
    nz.mu_mu.assign(m_len, cplx(0.0, 0.0));
    nz.mu_eta.assign(m_len, cplx(0.0, 0.0));

    if (tab.has_thermal && filters.p_im > 0) {
        const std::size_t pim = filters.p_im;
        const auto xb1 = sample_white(rng, pim, dtau);
        const auto xb2 = sample_white(rng, m_len, dtau);
        const auto xb3 = sample_white(rng, m_len, dtau);

        std::vector<cplx> work_m(pim);
        for (std::size_t q = 0; q < pim; ++q) work_m[q] = xb1[q];
        fft_forward(work_m);
        for (std::size_t k = 0; k < pim; ++k) work_m[k] *= filters.spectrum_mu_mu[k];
        fft_inverse(work_m);
        for (std::size_t m = 0; m < m_len; ++m) nz.mu_mu[m] = work_m[m].real();

        for (std::size_t m = 0; m < m_len; ++m) nz.mu_eta[m] = cplx(xb3[m], xb2[m]);

        // eta_mu: direct two-time sum over the left-rectangle nodes.  The
        // -(i/2) dtau filter scale is folded into the white stream once.
        const std::size_t m_sum = m_len - 1;
        std::vector<cplx> wbar(m_sum);
        for (std::size_t m = 0; m < m_sum; ++m) {
            wbar[m] = cplx(0.0, -0.5 * dtau) * cplx(xb2[m], xb3[m]);
        }
        const std::size_t rows =
            std::min<std::size_t>(static_cast<std::size_t>(std::max(filters.eta_mu_rows, 0)),
                                  n_len);
        const double* w = reinterpret_cast<const double*>(wbar.data());
        for (std::size_t n = 0; n < rows; ++n) {
            const double* row =
                reinterpret_cast<const double*>(tab.k_eta_mu.data() + n * m_len);
            double acc_re = 0.0, acc_im = 0.0;
            for (std::size_t m = 0; m < m_sum; ++m) {
                const double kr = row[2 * m], ki = row[2 * m + 1];
                const double wr = w[2 * m], wi = w[2 * m + 1];
                acc_re += kr * wr - ki * wi;
                acc_im += kr * wi + ki * wr;
            }
            nz.eta_mu[n] = cplx(acc_re, acc_im);
        }
    }

    rescale_components(nz, scaling);

    nz.eta.resize(n_len);
    for (std::size_t n = 0; n < n_len; ++n) {
        nz.eta[n] = nz.eta_eta[n] + nz.eta_nu[n] + nz.eta_mu[n];
    }
    nz.nu = nz.nu_eta;
    nz.mu.resize(m_len);
    for (std::size_t m = 0; m < m_len; ++m) {
        nz.mu[m] = nz.mu_mu[m] + nz.mu_eta[m];
    }
    return nz;
}

}  // namespace esln
