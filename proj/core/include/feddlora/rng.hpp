#pragma once

#include <cstdint>
#include <random>

namespace feddlora {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent substream seed from (base, a, b). Used to give
// every client/round/component its own reproducible stream so that results
// do not depend on execution order or thread count.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(base ^ mix64(a + 0x100)) ^ mix64(b + 0x200));
}

}  // namespace feddlora
