#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace aof::rng {

// All randomness flows through splitmix64 so results are identical across
// platforms and standard libraries. std::shuffle and std::uniform_int_distribution
// are deliberately avoided: their outputs are implementation-defined.

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// FNV-1a, the pinned 64-bit string hash for seeds, cache keys and feature
// hashing.
inline uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

// Fans a top-level seed out to an independent stream per purpose.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
    uint64_t state = seed ^ fnv1a64(tag);
    return splitmix64(state);
}

// Unbiased bounded draw by rejection.
inline uint64_t bounded(uint64_t& state, uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = splitmix64(state);
    } while (x >= limit);
    return x % n;
}

template <typename T>
void shuffle(std::vector<T>& items, uint64_t& state) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(bounded(state, i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace aof::rng
