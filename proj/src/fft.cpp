// fft.cpp — FFTW3 plan cache and execution helpers.
#include "esln/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace esln {

namespace {

// FFTW planning is not thread-safe; execution of a ready plan on new arrays
// is.  Plans use FFTW_UNALIGNED so any heap buffer is acceptable at execute
// time, and FFTW_ESTIMATE so planning never measures (deterministic).
class PlanCache {
  public:
    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        const std::uint64_t key = (static_cast<std::uint64_t>(n) << 1) | (sign < 0 ? 0u : 1u);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan =
            fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw std::runtime_error("fft: plan creation failed for n=" + std::to_string(n));
        plans_.emplace(key, plan);
        return plan;
    }

  private:
    std::mutex mutex_;
    std::unordered_map<std::uint64_t, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void execute(std::vector<std::complex<double>>& data, int sign) {
    if (data.empty()) throw std::invalid_argument("fft: empty buffer");
    fftw_plan plan = cache().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

}  // namespace

void fft_forward(std::vector<std::complex<double>>& data) {
    execute(data, FFTW_FORWARD);
}

void fft_inverse(std::vector<std::complex<double>>& data) {
    execute(data, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& z : data) z *= scale;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace esln
