#pragma once

#include <cstdint>
#include <random>

namespace tsad {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent per-sample seeds from a
/// master seed so that sample k never depends on how samples 0..k-1 were drawn.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ (index * 0xd1b54a32d192ed03ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
    return derive_seed(derive_seed(master, stream), index);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Inclusive on both ends.
inline long uniform_int(Rng& rng, long lo, long hi) {
    return std::uniform_int_distribution<long>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p_true = 0.5) {
    return std::bernoulli_distribution(p_true)(rng);
}

} // namespace tsad
