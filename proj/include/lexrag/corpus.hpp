#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lexrag/text.hpp"

namespace lexrag {

struct Sentence {
    std::uint32_t index = 0;
    std::size_t byte_start = 0;
    std::size_t byte_end = 0; // exclusive
    std::vector<std::string> tokens;
};

struct Document {
    std::string doc_id;
    std::string raw_text;
    std::vector<Sentence> sentences;

    std::string_view sentence_text(std::uint32_t i) const;
    /// Verbatim slice covering sentences [first, last], including the
    /// original whitespace between them.
    std::string_view span_text(std::uint32_t first, std::uint32_t last) const;
};

/// Splits text on terminal punctuation (. ! ?), optionally followed by
/// closing quotes/brackets, followed by whitespace or end of input. Periods
/// after known abbreviations do not split. A run with no terminator is one
/// sentence. Sentences are trimmed; everything between them is whitespace.
std::vector<Sentence> segment_sentences(std::string_view raw_text);

/// Segments and tokenizes in one go.
Document make_document(std::string doc_id, std::string raw_text);

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
};

/// Inverted index from normalized token to the sorted sentence indices that
/// contain it. Immutable after build; safe to share across readers.
class SentenceIndex {
public:
    using PostingsMap =
        std::unordered_map<std::string, std::vector<std::uint32_t>, StringHash, std::equal_to<>>;

    SentenceIndex() = default;

    /// Postings for a token, or nullptr when absent. Lists are strictly increasing.
    const std::vector<std::uint32_t>* postings(std::string_view token) const;

    const std::string& doc_id() const { return doc_id_; }
    std::size_t distinct_tokens() const { return postings_.size(); }
    const PostingsMap& raw() const { return postings_; }

    friend SentenceIndex build_index(const Document& doc);

private:
    std::string doc_id_;
    PostingsMap postings_;
};

SentenceIndex build_index(const Document& doc);

struct CountResult {
    std::vector<std::uint64_t> per_variant;
    std::uint64_t total = 0;
};

/// Counts case-insensitive, word-boundary, non-overlapping occurrences of
/// each variant phrase over the whole document token stream. Phrases may
/// span sentence boundaries. Throws EmptyVariantError when a variant has no
/// tokens.
CountResult count_occurrences(const Document& doc, std::span<const Phrase> variants);

/// True when the phrase tokens appear as a contiguous run in `tokens`.
bool contains_phrase(std::span<const std::string> tokens, const Phrase& phrase);

} // namespace lexrag
