// noise.hpp — correlated noise synthesis from filters and white streams.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "esln/filters.hpp"
#include "esln/rng.hpp"

namespace esln {

// Amplitude split between the two members of each cross-correlated pair.
// Only the products eta_nu*nu_eta and eta_mu*mu_eta are fixed by the
// correlation targets; the ratios below choose how the amplitude is shared.
struct ScalingSpec {
    double r_nu_eta = 0.5;  // target amplitude ratio |nu_eta| / |eta_nu|
    double r_mu_eta = 1.0;  // target amplitude ratio |mu_eta| / |eta_mu|
};

// One trajectory's noises.  Totals are eta = eta_eta + eta_nu + eta_mu,
// nu = nu_eta, mu = mu_mu + mu_eta; the components stay available for
// diagnostics and calibration.
struct NoiseRealisation {
    std::vector<std::complex<double>> eta;  // N+1
    std::vector<std::complex<double>> nu;   // N+1
    std::vector<std::complex<double>> mu;   // M+1

    std::vector<std::complex<double>> eta_eta;  // N+1
    std::vector<std::complex<double>> eta_nu;   // N+1
    std::vector<std::complex<double>> eta_mu;   // N+1
    std::vector<std::complex<double>> nu_eta;   // N+1
    std::vector<std::complex<double>> mu_mu;    // M+1
    std::vector<std::complex<double>> mu_eta;   // M+1

    double b_nu_eta = 1.0;  // factor applied as eta_nu *= b, nu_eta /= b
    double a_mu_eta = 1.0;  // factor applied as eta_mu *= a, mu_eta /= a
    bool nu_rescale_skipped = false;  // zero denominator: pair left unscaled
    bool mu_rescale_skipped = false;
};

// Independent Gaussian stream with variance 1/step per sample.
std::vector<double> sample_white(Rng& rng, std::size_t count, double step);

// Draws whites in the fixed order x1[p_re], x2[p_re], x3[p_re] and, when the
// filters carry thermal tables, xb1[p_im], xb2[M+1], xb3[M+1]; colours them
// through the filters; rescales; assembles totals.  Throws
// std::invalid_argument on a non-positive scaling ratio.
NoiseRealisation synthesize(const FilterSet& filters, const ScalingSpec& scaling, Rng& rng);

// Amplitude rescaling step of synthesize, exposed for direct checks:
//   b = sqrt(r_nu_eta) * sqrt(sum_n |nu_eta| / sum_n |eta_nu|)
//   a = sqrt(r_mu_eta) * sqrt((sum_m |mu_eta| / M) / max_n |eta_mu|)
// applied as above.  A zero denominator (or an absent pair) skips that pair
// and raises its flag; every paired product is left invariant.  Totals are
// not touched — synthesize assembles them afterwards.
void rescale_components(NoiseRealisation& noise, const ScalingSpec& scaling);

}  // namespace esln
