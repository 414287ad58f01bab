#pragma once

#include <cstdint>
#include <random>

namespace lmkg {

using Rng = std::mt19937_64;

/// Derives an independent stream seed, e.g. for (seed, worker index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over a mix of both inputs
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform integer in [0, bound). Portable (no libstdc++ distribution internals).
inline std::uint64_t uniform_below(Rng &rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace lmkg
