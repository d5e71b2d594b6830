#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lexrag {

inline constexpr std::uint32_t kNoiseSubstitute = 1u << 0;
inline constexpr std::uint32_t kNoiseDelete = 1u << 1;
inline constexpr std::uint32_t kNoiseInsert = 1u << 2;
inline constexpr std::uint32_t kNoiseSwapAdjacent = 1u << 3;
inline constexpr std::uint32_t kNoiseAll =
    kNoiseSubstitute | kNoiseDelete | kNoiseInsert | kNoiseSwapAdjacent;

/// Character-level perturbation parameters for ε_λ.
struct NoiseSpec {
    double lambda = 0.5;       // per-character corruption probability, in (0, 1]
    std::uint64_t seed = 0;    // stream seed; same seed → same output
    std::uint32_t ops = kNoiseAll;
};

/// Splits text into UTF-8 units (code points; each invalid byte is one unit).
std::vector<std::string_view> utf8_units(std::string_view text);

/// Corrupts each character independently with probability lambda using a
/// uniformly chosen enabled operation. Deterministic given the NoiseSpec:
/// draws are counter-based per character, so the result does not depend on
/// thread count. Throws ConfigError when the NoiseSpec is out of range.
std::string inject_noise(std::string_view text, const NoiseSpec& spec);

} // namespace lexrag
