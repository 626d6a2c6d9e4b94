// expint.cpp — E_s(z) via power series, continued fraction, or asymptotics.
#include "esln/expint.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace esln {

namespace {

using cplx = std::complex<double>;

constexpr double kSeriesRadius = 1.5;
constexpr double kAsymptoticRadius = 256.0;
constexpr int kMaxIter = 100000;
constexpr double kEps = 1e-16;
constexpr double kEulerGamma = 0.57721566490153286061;

// psi(s) = -gamma + sum_{k=1}^{s-1} 1/k for integer s >= 1.
double digamma_int(int s) {
    double v = -kEulerGamma;
    for (int k = 1; k < s; ++k) v += 1.0 / k;
    return v;
}

// Power series, valid for small |z|, z != 0:
// E_s(z) = (-z)^{s-1}/(s-1)! * (-log z + psi(s))
//          - sum_{m>=0, m != s-1} (-z)^m / (m! * (m - s + 1)).
cplx series(int s, cplx z) {
    cplx pow_term(1.0, 0.0);  // (-z)^m / m!
    cplx sum(0.0, 0.0);
    cplx log_part(0.0, 0.0);
    for (int m = 0; m <= 600; ++m) {
        if (m == s - 1) {
            log_part = pow_term * (-std::log(z) + digamma_int(s));
        } else {
            const cplx term = pow_term / static_cast<double>(m - s + 1);
            sum += term;
            if (m > s && std::abs(term) < kEps * (std::abs(sum) + 1e-300)) {
                return log_part - sum;
            }
        }
        pow_term *= -z / static_cast<double>(m + 1);
    }
    throw std::runtime_error("expint_e: series failed to converge");
}

// Modified Lentz continued fraction for the scaled value exp(z) E_s(z):
// E_s(z) = exp(-z) / (z + s - 1*s/(z + s + 2 - 2*(s+1)/(z + s + 4 - ...))).
cplx continued_fraction_scaled(int s, cplx z) {
    const double tiny = 1e-300;
    cplx b = z + static_cast<double>(s);
    cplx c(1.0 / tiny, 0.0);
    cplx d = 1.0 / b;
    cplx h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double a = -static_cast<double>(i) * (s - 1.0 + i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const cplx del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("expint_e: continued fraction failed to converge at |z|=" +
                             std::to_string(std::abs(z)));
}

// Asymptotic series exp(z) E_s(z) ~ (1/z) sum_m (-1)^m (s)_m z^{-m}; the
// terms shrink monotonically throughout for |z| >= 256 and s <= ~40.
cplx asymptotic_scaled(int s, cplx z) {
    cplx term = 1.0 / z;
    cplx sum = term;
    for (int m = 1; m <= 40; ++m) {
        term *= -static_cast<double>(s + m - 1) / z;
        sum += term;
        if (std::abs(term) < kEps * std::abs(sum)) return sum;
    }
    throw std::runtime_error("expint_e: asymptotic series failed to converge");
}

void check_domain(int s, cplx z) {
    if (s < 1) throw std::invalid_argument("expint_e: need s >= 1");
    if (z.real() < 0.0 || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("expint_e: need finite z with Re(z) >= 0");
    if (z == cplx(0.0, 0.0) && s < 2)
        throw std::invalid_argument("expint_e: E_1(0) diverges");
}

}  // namespace

cplx expint_e(int s, cplx z) {
    check_domain(s, z);
    if (z == cplx(0.0, 0.0)) return cplx(1.0 / (s - 1), 0.0);
    if (std::abs(z) <= kSeriesRadius) return series(s, z);
    if (std::abs(z) >= kAsymptoticRadius) return std::exp(-z) * asymptotic_scaled(s, z);
    return std::exp(-z) * continued_fraction_scaled(s, z);
}

cplx expint_e_scaled(int s, cplx z) {
    check_domain(s, z);
    if (z == cplx(0.0, 0.0)) return cplx(1.0 / (s - 1), 0.0);
    if (std::abs(z) <= kSeriesRadius) return std::exp(z) * series(s, z);
    if (std::abs(z) >= kAsymptoticRadius) return asymptotic_scaled(s, z);
    return continued_fraction_scaled(s, z);
}

}  // namespace esln
