#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace quboport {

/// splitmix64 step; the standard mixer for turning correlated seeds into
/// decorrelated engine states.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from (master, stream index). Every
/// concurrent unit of work gets its own stream so results do not depend on
/// scheduling or worker count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (stream * 0xd1342543de82ef95ULL + 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return splitmix64(s);
}

/// Derive a stream seed from a stage label. Labeled stages keep their
/// streams stable when new stages are added to a pipeline.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    // FNV-1a over the label, then the usual mix.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return derive_seed(master, h);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    std::uint64_t s = seed;
    std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
    return std::mt19937_64(seq);
}

/// Uniform double in [0, 1) with exactly 53 random bits. Bit-identical
/// across platforms, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Multiply-shift; the O(2^-64) bias is
/// irrelevant here and the result is platform-independent.
inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(gen()) * n;
    return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform nonempty bitmask over `universe` bits (universe <= 64).
inline std::uint64_t random_nonempty_mask(std::mt19937_64& gen, int universe) {
    const std::uint64_t full =
        universe >= 64 ? ~0ULL : ((1ULL << universe) - 1ULL);
    std::uint64_t m;
    do {
        m = gen() & full;
    } while (m == 0);
    return m;
}

}  // namespace quboport
