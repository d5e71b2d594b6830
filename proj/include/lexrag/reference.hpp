#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexrag/corpus.hpp"
#include "lexrag/noise.hpp"
#include "lexrag/retrieval.hpp"

// Plain serial implementations of the parallel kernels. These are the
// oracles: no inverted index, no OpenMP, no shared scan structure — just the
// most literal reading of each definition. Tests assert the production
// kernels match them exactly; kernel_bench times the two side by side.
namespace lexrag::ref {

/// Single left-to-right scan with the same boundary rules.
std::vector<Sentence> segment_sentences(std::string_view raw_text);

/// Serial segmentation + tokenization.
Document make_document(std::string doc_id, std::string raw_text);

/// One map, one pass, no thread-local merge.
SentenceIndex::PostingsMap build_postings(const Document& doc);

/// Scores every sentence by scanning its tokens; no index involved.
std::vector<ScoredSentence> collect_topk(const Document& doc, const TermSet& terms,
                                         std::size_t k);

/// Naive sliding-window count over the flattened token stream.
CountResult count_occurrences(const Document& doc, std::span<const Phrase> variants);

/// Direct serial walk: decide-and-emit in one pass, consuming swap pairs as
/// it goes, instead of the production decision-array + suppression pass.
std::string inject_noise(std::string_view text, const NoiseSpec& spec);

} // namespace lexrag::ref
