#pragma once

#include <cstdint>
#include <random>

namespace caudg {

/// Purpose tags for derived RNG streams, so the draw sequence of one part of a
/// run never depends on how often another part consumed randomness.
enum class RngStream : std::uint64_t {
    kInit = 1,
    kShuffle = 2,
    kIds = 3,
    kSplit = 4,
    kSynth = 5,
};

/// splitmix64-style mixing of (seed, stream, a, b) into a child seed.
std::uint64_t derive_seed(std::uint64_t seed, RngStream stream, std::uint64_t a = 0,
                          std::uint64_t b = 0);

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream, std::uint64_t a = 0,
                                std::uint64_t b = 0) {
    return std::mt19937_64(derive_seed(seed, stream, a, b));
}

/// One standard normal draw. Stateless wrapper so call sites never share
/// distribution-internal caches.
double draw_normal(std::mt19937_64& rng);

}  // namespace caudg
