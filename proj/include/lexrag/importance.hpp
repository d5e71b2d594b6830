#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexrag/llm.hpp"
#include "lexrag/noise.hpp"
#include "lexrag/retrieval.hpp"
#include "lexrag/similarity.hpp"

namespace lexrag {

/// Outcome of Monte-Carlo perturbation scoring for one chunk.
struct ImportanceEntry {
    double score = 0.0;               // 1 − mean(similarities), in [0,1]
    std::size_t n_samples = 0;        // requested
    std::size_t n_effective = 0;      // samples that produced a similarity
    std::vector<double> lambdas;      // drawn noise levels, one per requested sample
    std::vector<double> similarities; // one per effective sample
};

struct ImportanceReport {
    std::vector<ImportanceEntry> entries;

    std::vector<double> scores() const {
        std::vector<double> out;
        out.reserve(entries.size());
        for (const ImportanceEntry& e : entries)
            out.push_back(e.score);
        return out;
    }
};

/// Scores one chunk: asks the model with the intact chunk (chunk before the
/// query in one prompt), then n_samples times with the chunk perturbed at a
/// fresh λ ~ Uniform(0,1], and returns 1 − mean(similarity to the baseline).
/// A failed sample is retried once, then dropped; the baseline call and a
/// fully failed sample set propagate their error.
ImportanceEntry importance(const Chunk& chunk, const std::string& query, Llm& llm,
                           SimilarityScorer& similarity, std::size_t n_samples,
                           std::uint64_t rng_seed, std::uint32_t noise_ops = kNoiseAll);

/// importance() over every chunk, entries in input order. Per-chunk RNG
/// streams split from the master seed, so results do not depend on
/// evaluation order.
ImportanceReport score_all(std::span<const Chunk> chunks, const std::string& query, Llm& llm,
                           SimilarityScorer& similarity, std::size_t n_samples,
                           std::uint64_t master_seed, std::uint32_t noise_ops = kNoiseAll);

} // namespace lexrag
