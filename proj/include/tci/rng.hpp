#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tci {

/// Deterministic RNG engine used throughout the simulator. All stochastic
/// operations take either an explicit seed or an engine reference; identical
/// seeds give bit-identical streams within one build.
using RngEngine = std::mt19937_64;

/// splitmix64 finalizer, used to derive well-separated substream seeds from
/// a master seed without correlations between nearby inputs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive the seed for a named substream (e.g. "arrivals", "dark.rows")
/// from a master seed. FNV-1a over the label, mixed with splitmix64.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char ch : stream) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    return splitmix64(master ^ h);
}

/// Substream seed additionally indexed by an integer (sweep point, branch, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index) {
    return splitmix64(derive_seed(master, stream) ^ splitmix64(index));
}

} // namespace tci
