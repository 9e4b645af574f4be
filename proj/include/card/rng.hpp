#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <vector>

namespace card {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derives a child stream seed. Order-sensitive: combine(a,b) != combine(b,a).
inline std::uint64_t seed_combine(std::uint64_t base, std::uint64_t salt) {
    return mix64(base ^ mix64(salt));
}

inline std::uint64_t seed_combine_double(std::uint64_t base, double salt) {
    return seed_combine(base, std::bit_cast<std::uint64_t>(salt));
}

/// FNV-1a, used to fold short strings (method names) into seeds.
inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// k distinct indices drawn uniformly from [0, n), in draw order.
/// Partial Fisher-Yates; deterministic for a given engine state.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

} // namespace card
