// rng.cpp — splitmix64, xoshiro256++, Box-Muller.
#include "esln/rng.hpp"

#include <cmath>
#include <numbers>

namespace esln {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

// splitmix64 finalizer (bijective on 64-bit words).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    return mix64(state);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trajectory_index) {
    // mix64 is a bijection, so for fixed master_seed distinct indices give
    // distinct seeds.  The +1 keeps index 0 away from the fixed point mix64(0)=0.
    return master_seed ^ mix64(trajectory_index + 1);
}

Rng::Rng(std::uint64_t seed) {
    // Expand the seed through splitmix64, the seeding recommended for the
    // xoshiro family; the expansion never yields the all-zero state.
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_next(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    // (next >> 11) is uniform on [0, 2^53); +1 shifts to (0, 2^53], so the
    // result lies in (0, 1] and log() below is always finite.
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(phi);
    has_cached_ = true;
    return r * std::cos(phi);
}

}  // namespace esln
