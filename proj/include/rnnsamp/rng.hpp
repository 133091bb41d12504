#pragma once

// Counter-based random numbers. Every variate is a pure function of
// (key, counter), so draws can be generated in any order or in parallel
// without changing results.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rnnsamp {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
}

template <typename... Ts>
constexpr std::uint64_t hash_values(std::uint64_t first, Ts... rest) {
    std::uint64_t h = mix64(first);
    ((h = hash_combine(h, static_cast<std::uint64_t>(rest))), ...);
    return h;
}

/// Uniform double in the open interval (0, 1) built from the top 53 bits.
constexpr double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal variate number `counter` of the stream `key` (Box-Muller, cosine branch).
inline double counter_normal(std::uint64_t key, std::uint64_t counter) {
    const std::uint64_t a = hash_combine(key, 2 * counter);
    const std::uint64_t b = hash_combine(key, 2 * counter + 1);
    const double u1 = to_unit_open(a);
    const double u2 = to_unit_open(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double counter_uniform(std::uint64_t key, std::uint64_t counter) {
    return to_unit_open(hash_combine(key, counter));
}

/// Sequential generator over a counter stream; used where a draw order is natural.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    double uniform() { return counter_uniform(key_, counter_++); }
    double normal() { return counter_normal(key_, counter_++); }

    /// Uniform integer in [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            const std::uint64_t x = hash_combine(key_, counter_++);
            if (x < limit) return x % n;
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace rnnsamp
