#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace trafficgp {

using Rng = std::mt19937_64;

// Uniform on [0, 1) with 53 random bits; identical on every platform.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0, 1).
inline double uniform_open01(Rng& rng)
{
    for (;;) {
        const double u = uniform01(rng);
        if (u > 0.0) return u;
    }
}

// Unbiased integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n)
{
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
        const std::uint64_t x = rng();
        if (x < limit) return x % n;
    }
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi)
{
    return lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

inline bool bernoulli(Rng& rng, double p)
{
    return uniform01(rng) < p;
}

// Seeds an engine from a list of words through std::seed_seq.
inline Rng make_rng(std::initializer_list<std::uint64_t> words)
{
    std::vector<std::uint32_t> seeds;
    for (std::uint64_t w : words) {
        seeds.push_back(static_cast<std::uint32_t>(w));
        seeds.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq seq(seeds.begin(), seeds.end());
    return Rng(seq);
}

}  // namespace trafficgp
