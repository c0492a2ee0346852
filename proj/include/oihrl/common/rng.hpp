#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace oihrl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr auto mix_seed(std::uint64_t x) noexcept -> std::uint64_t {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive a child seed from a parent seed and a sequence of stream labels.
constexpr auto derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> labels) noexcept
    -> std::uint64_t {
    std::uint64_t s = mix_seed(parent);
    for (auto l : labels) {
        s = mix_seed(s ^ mix_seed(l + 0x632be59bd9b4e019ULL));
    }
    return s;
}

/// Uniform double in [0, 1) from 53 random bits; independent of the standard library's distributions.
inline auto uniform01(Rng &rng) -> double {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection sampling.
inline auto uniform_index(Rng &rng, std::uint64_t n) -> std::uint64_t {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = rng();
    while (r >= limit) {
        r = rng();
    }
    return r % n;
}

}    // namespace oihrl
