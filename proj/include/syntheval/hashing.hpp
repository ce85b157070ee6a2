#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace syntheval {

/// FNV-1a 64-bit. Stable across platforms and runs; used for config
/// fingerprints, deterministic mock seeding, and cache keys.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// splitmix64 step; the standard finalizer-style PRNG for seeding.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string to_hex(std::uint64_t value);

}  // namespace syntheval
