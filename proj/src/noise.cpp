#include "lexrag/noise.hpp"

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lexrag/errors.hpp"
#include "lexrag/rng.hpp"
#include "lexrag/text.hpp"

namespace lexrag {
namespace {

constexpr std::string_view kAlphabet =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

constexpr std::size_t kParallelNoiseCutoff = 1 << 14; // units

enum class Op : std::uint8_t { none, substitute, erase, insert, swap };

std::vector<Op> enabled_ops(std::uint32_t mask) {
    std::vector<Op> ops;
    if (mask & kNoiseSubstitute)
        ops.push_back(Op::substitute);
    if (mask & kNoiseDelete)
        ops.push_back(Op::erase);
    if (mask & kNoiseInsert)
        ops.push_back(Op::insert);
    if (mask & kNoiseSwapAdjacent)
        ops.push_back(Op::swap);
    return ops;
}

} // namespace

std::vector<std::string_view> utf8_units(std::string_view text) {
    std::vector<std::string_view> units;
    units.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t len = utf8_unit_length(text, pos);
        units.push_back(text.substr(pos, len));
        pos += len;
    }
    return units;
}

std::string inject_noise(std::string_view text, const NoiseSpec& spec) {
    if (!(spec.lambda > 0.0) || spec.lambda > 1.0)
        throw ConfigError("inject_noise: lambda must be in (0, 1]");
    const std::vector<Op> ops = enabled_ops(spec.ops);
    if (ops.empty())
        throw ConfigError("inject_noise: no noise operations enabled");

    const std::vector<std::string_view> units = utf8_units(text);
    const std::size_t n = units.size();
    std::vector<Op> decision(n, Op::none);
    std::vector<char> param(n, 0);

    // Three counter-based draws per character (corrupt? which op? parameter),
    // so every unit's fate is a pure function of (seed, position).
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < count; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        if (u01_closed(mix64(spec.seed, 3 * i)) > spec.lambda)
            continue;
        const Op op = ops[mix64(spec.seed, 3 * i + 1) % ops.size()];
        decision[i] = op;
        if (op == Op::substitute) {
            // draw from the first 61 letters; on identity, fall to the 62nd,
            // so a substituted character never equals the original
            std::size_t idx = mix64(spec.seed, 3 * i + 2) % (kAlphabet.size() - 1);
            if (units[i].size() == 1 && units[i][0] == kAlphabet[idx])
                idx = kAlphabet.size() - 1;
            param[i] = kAlphabet[idx];
        } else if (op == Op::insert) {
            param[i] = kAlphabet[mix64(spec.seed, 3 * i + 2) % kAlphabet.size()];
        }
    }

    // A unit consumed by its predecessor's swap loses its own decision; each
    // suppression depends on the previous one, so this pass stays serial.
    std::vector<unsigned char> consumed(n, 0);
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (decision[i] == Op::swap && !consumed[i])
            consumed[i + 1] = 1;

    auto emit_range = [&](std::size_t lo, std::size_t hi, std::string& out) {
        for (std::size_t i = lo; i < hi; ++i) {
            if (consumed[i])
                continue;
            switch (decision[i]) {
            case Op::none:
                out += units[i];
                break;
            case Op::substitute:
                out.push_back(param[i]);
                break;
            case Op::erase:
                break;
            case Op::insert:
                out.push_back(param[i]);
                out += units[i];
                break;
            case Op::swap:
                if (i + 1 < n) {
                    out += units[i + 1];
                    out += units[i];
                } else {
                    out += units[i]; // nothing to swap with
                }
                break;
            }
        }
    };

#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    std::string result;
    if (n >= kParallelNoiseCutoff && threads > 1) {
        std::vector<std::string> parts(threads);
#pragma omp parallel num_threads(threads)
        {
#ifdef _OPENMP
            const int tid = omp_get_thread_num();
            const int tn = omp_get_num_threads();
#else
            const int tid = 0;
            const int tn = 1;
#endif
            emit_range(n * static_cast<std::size_t>(tid) / tn,
                       n * (static_cast<std::size_t>(tid) + 1) / tn, parts[tid]);
        }
        std::size_t total = 0;
        for (const std::string& p : parts)
            total += p.size();
        result.reserve(total);
        for (const std::string& p : parts)
            result += p;
    } else {
        result.reserve(text.size());
        emit_range(0, n, result);
    }
    return result;
}

} // namespace lexrag
