#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trajattr::rng {

using Engine = std::mt19937_64;

/// splitmix64 finalizer; good avalanche, stable across platforms.
constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive an independent stream seed from (master, purpose tag, index).
/// Adding a new tag never perturbs the streams of existing tags.
constexpr std::uint64_t derive(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    return mix(mix(master ^ fnv1a(tag)) ^ index);
}

inline Engine make_engine(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    return Engine(derive(master, tag, index));
}

/// Uniform in [0,1) with 53-bit resolution. Hand-rolled: std distributions
/// are not bit-stable across standard library implementations.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Unbiased uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % n;
}

inline double uniform_range(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

}  // namespace trajattr::rng
