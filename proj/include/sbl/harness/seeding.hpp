// seeding.hpp - counter-based substream seeds and the uniform deviate convention

#pragma once

#include <cstdint>
#include <random>

namespace sbl {

inline std::uint64_t splitmix_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// SplitMix64 finalizer applied to mix(master) + (chunk + 1) * golden gamma. The finalizer is a
// bijection on 64-bit words, so distinct chunk indices under one master never collide; mixing
// the master first keeps masters that differ by a multiple of the gamma from sharing streams.
inline std::uint64_t seed_derivation(std::uint64_t master_seed, std::uint64_t chunk_index) {
    return splitmix_finalize(splitmix_finalize(master_seed) + (chunk_index + 1) * 0x9e3779b97f4a7c15ULL);
}

using Rng = std::mt19937_64;

// Uniform on [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace sbl
