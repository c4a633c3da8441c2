#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace kpd {

using Rng = std::mt19937_64;

// splitmix64 step; used to derive independent stream seeds from one user seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return splitmix64(s);
}

// Distributions are hand-rolled: the standard library ones are
// implementation-defined, so sequences would not be reproducible.

inline double uniform01(Rng& rng) {  // [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {  // [0, n)
    return rng() % n;
}

// Box-Muller; consumes two uniforms per call.
inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace kpd
