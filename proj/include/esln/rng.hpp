// rng.hpp — reproducible random streams: splitmix64 seeding, xoshiro256++
// generation, explicit Box-Muller gaussians.
//
// The standard library's normal_distribution is implementation-defined, so
// everything here is spelled out to make trajectories bit-reproducible across
// toolchains.
#pragma once

#include <cstdint>

namespace esln {

// One step of the splitmix64 sequence; advances state and returns the output.
std::uint64_t splitmix64_next(std::uint64_t& state);

// Per-trajectory seed, injective in trajectory_index for a fixed master seed:
// master XOR (bijective splitmix64 finalizer of index + 1).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trajectory_index);

// xoshiro256++ with splitmix64 state expansion and a Box-Muller pair cache.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in (0, 1], 53-bit resolution.
    double uniform();

    // Standard normal deviate.  Pairs are drawn together and the second value
    // is cached, so the draw order is fixed by the call count alone.
    double gaussian();

  private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace esln
