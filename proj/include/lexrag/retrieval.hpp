#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexrag/corpus.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

enum class TermOrigin { initial, breadth, depth, counting };

constexpr const char* to_string(TermOrigin origin) {
    switch (origin) {
    case TermOrigin::initial: return "initial";
    case TermOrigin::breadth: return "breadth";
    case TermOrigin::depth: return "depth";
    case TermOrigin::counting: return "counting";
    }
    return "initial";
}

/// The target terms T: normalized, deduplicated, non-empty phrases.
struct TermSet {
    std::vector<Phrase> terms;
    TermOrigin origin = TermOrigin::initial;
};

/// Normalizes raw strings into a TermSet, dropping phrases that normalize to
/// nothing and deduplicating while preserving first-seen order.
TermSet make_term_set(std::span<const std::string> raw, TermOrigin origin);

/// Appends phrases from `src` that are not already in `dst`, up to `max_new`
/// additions. Returns the number actually added.
std::size_t accumulate_terms(TermSet& dst, std::span<const Phrase> src, std::size_t max_new);

/// A retrieved sentence plus its symmetric neighborhood.
struct Chunk {
    std::string doc_id;
    std::uint32_t center_sentence = 0;
    std::uint32_t span_first = 0;
    std::uint32_t span_last = 0; // inclusive
    std::string text;
    std::uint32_t score = 1;
    std::uint32_t round = 1;
};

struct ScoredSentence {
    std::uint32_t index = 0;
    std::uint32_t score = 0;
};

/// Number of distinct terms of T present in the sentence; a phrase is present
/// when its tokens form a contiguous run. Repeats inside the sentence count once.
std::uint32_t overlap_score(const Sentence& sentence, const TermSet& terms);

/// Top-k sentences by overlap score, descending, ties broken by ascending
/// sentence index. Only sentences with score >= 1 appear. Identical to
/// brute-force scoring of every sentence.
std::vector<ScoredSentence> collect_topk(const SentenceIndex& index, const Document& doc,
                                         const TermSet& terms, std::size_t k);

/// Symmetric window of `radius` sentences on each side of the hit, clamped to
/// the document. Text is the verbatim slice of raw_text over the span.
Chunk expand_context(const Document& doc, std::uint32_t hit, std::uint32_t radius,
                     std::uint32_t score = 1, std::uint32_t round = 1);

/// Coalesces overlapping or adjacent spans (gap zero). A merged chunk keeps
/// the max score, the min round, and the center of its highest-scoring input;
/// text is recomputed from the document. Output is sorted by span start.
std::vector<Chunk> merge_chunks(const Document& doc, std::vector<Chunk> chunks);

} // namespace lexrag
