#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace gensyn {

using Rng = std::mt19937_64;

/// Derives an independent generator for (seed, stream). Streams keep
/// per-method and per-iteration draws decoupled so adding a method to a
/// run does not shift the draws of the others.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    // splitmix64 mix of seed and stream id
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return Rng(z);
}

inline double uniform01(Rng &rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Draws an index proportional to the (nonnegative) weights.
/// Zero-total weights fall back to a uniform draw.
inline int draw_categorical(Rng &rng, std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0.0)
        return std::uniform_int_distribution<int>(0, static_cast<int>(weights.size()) - 1)(rng);
    double r = uniform01(rng) * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

} // namespace gensyn
