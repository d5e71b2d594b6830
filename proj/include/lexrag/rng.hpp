#pragma once

#include <cstdint>

namespace lexrag {

// SplitMix64 finalizer. Pure integer ops, identical on every platform.
inline std::uint64_t hash64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives an independent value from a seed and a counter. Used to split
/// deterministic streams per (chunk, sample) or per character position, so
/// results do not depend on evaluation order or thread count.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t n) {
    return hash64(seed + 0x9e3779b97f4a7c15ull * (n + 1));
}

/// Uniform double in (0, 1]. Never returns 0.
inline double u01_closed(std::uint64_t bits) {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

/// Small sequential generator for places where a stream of draws is fine.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        return hash64(state_);
    }

    double next_u01_closed() { return u01_closed(next()); }

    // Modulo bias is irrelevant at the scales used here.
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

} // namespace lexrag
