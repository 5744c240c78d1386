#pragma once

#include <cstdint>

namespace acp {

/// Order-independent child seed for item `index` of a stream seeded by `seed`
/// (splitmix64 finalizer applied to the pair).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(seed ^ mix(index + 0x632be59bd9b4e019ULL));
}

}  // namespace acp
