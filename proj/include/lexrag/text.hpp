#pragma once

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lexrag {

/// A normalized multi-token search phrase. Single words are phrases of one token.
struct Phrase {
    std::vector<std::string> tokens;

    /// Tokens joined with single spaces; the canonical display/dedup key.
    std::string text() const;

    bool empty() const { return tokens.empty(); }
    auto operator<=>(const Phrase&) const = default;
};

/// Normalizes one word: case folding (ASCII and Latin-1), surrounding
/// punctuation stripped, internal apostrophes kept. Returns "" when nothing
/// survives, which means the word is discarded.
std::string normalize_token(std::string_view word);

/// Splits text into normalized tokens. A token is a maximal run of
/// letters/digits/apostrophes; everything else separates. Curly apostrophes
/// fold to ASCII, non-Latin scripts pass through verbatim.
std::vector<std::string> tokenize(std::string_view text);

/// Tokenizes arbitrary text into a phrase (all tokens, in order).
Phrase normalize_phrase(std::string_view text);

/// Byte length of the UTF-8 unit starting at `pos` (always >= 1; an invalid
/// byte is its own unit, so scans advance no matter what).
std::size_t utf8_unit_length(std::string_view text, std::size_t pos);

} // namespace lexrag
