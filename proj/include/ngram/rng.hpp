#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ngram {

// All randomness in this project flows through these helpers. std::mt19937_64
// output is fully specified by the standard; the standard *distributions* are
// not, so we roll our own to keep seeds reproducible across toolchains
// (golden files and loss traces depend on this).
using rng64 = std::mt19937_64;

// Uniform double in [0, 1) with 53 bits of randomness.
inline double uniform01(rng64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) via rejection sampling (bound >= 1).
inline std::uint64_t uniform_below(rng64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

// Standard normal via Box-Muller (one value per call, no cached spare).
inline double gaussian(rng64& rng) {
    double u;
    do {
        u = uniform01(rng);
    } while (u <= 0.0);
    const double v = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * std::numbers::pi * v);
}

}  // namespace ngram
