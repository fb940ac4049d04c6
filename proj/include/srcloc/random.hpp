#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace srcloc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based substream seed: hashes the master seed together with an
// ordered list of keys (tags, trial indices, bit patterns of axis values).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t k : keys) s = splitmix64(s ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return s;
}

inline std::uint64_t key_of(double value) { return std::bit_cast<std::uint64_t>(value); }

}  // namespace srcloc
