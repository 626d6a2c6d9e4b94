// fft.hpp — thin deterministic wrapper over FFTW3 complex transforms.
#pragma once

#include <complex>
#include <vector>

namespace esln {

// In-place DFT, sign convention X_k = sum_j x_j exp(-2*pi*i*j*k/n).
// Plans are created with FFTW_ESTIMATE (deterministic, no runtime tuning),
// cached per size, and guarded by a mutex; execution is thread-safe.
void fft_forward(std::vector<std::complex<double>>& data);

// In-place inverse DFT including the 1/n normalisation.
void fft_inverse(std::vector<std::complex<double>>& data);

// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

}  // namespace esln
