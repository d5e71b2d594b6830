#include "lexrag/text.hpp"

#include <cstdint>

namespace lexrag {
namespace {

// Decodes the UTF-8 code point starting at text[pos]. Invalid bytes decode as
// a single-byte replacement-class code point so the scan always advances.
std::uint32_t decode_utf8(std::string_view text, std::size_t pos, std::size_t& len) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        len = 1;
        return b0;
    }
    auto cont = [&](std::size_t i) {
        return i < text.size() && (byte(i) & 0xc0) == 0x80;
    };
    if ((b0 & 0xe0) == 0xc0 && cont(pos + 1)) {
        len = 2;
        return ((b0 & 0x1fu) << 6) | (byte(pos + 1) & 0x3fu);
    }
    if ((b0 & 0xf0) == 0xe0 && cont(pos + 1) && cont(pos + 2)) {
        len = 3;
        return ((b0 & 0x0fu) << 12) | ((byte(pos + 1) & 0x3fu) << 6) | (byte(pos + 2) & 0x3fu);
    }
    if ((b0 & 0xf8) == 0xf0 && cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
        len = 4;
        return ((b0 & 0x07u) << 18) | ((byte(pos + 1) & 0x3fu) << 12) |
               ((byte(pos + 2) & 0x3fu) << 6) | (byte(pos + 3) & 0x3fu);
    }
    len = 1;
    return 0xfffd;
}

void encode_utf8(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

enum class CharKind { separator, apostrophe, letter };

// Classifies a code point and case-folds it in place where we have a fold.
// ASCII and Latin-1 fold; curly apostrophe (U+2019) folds to '. Scripts
// beyond Latin pass through verbatim; punctuation blocks separate.
CharKind classify(std::uint32_t& cp) {
    if (cp < 0x80) {
        if (cp >= 'a' && cp <= 'z') return CharKind::letter;
        if (cp >= 'A' && cp <= 'Z') {
            cp += 0x20;
            return CharKind::letter;
        }
        if (cp >= '0' && cp <= '9') return CharKind::letter;
        if (cp == '\'') return CharKind::apostrophe;
        return CharKind::separator;
    }
    if (cp == 0x2019) { // right single quotation mark, used as apostrophe
        cp = '\'';
        return CharKind::apostrophe;
    }
    if (cp == 0xaa || cp == 0xb5 || cp == 0xba) return CharKind::letter;
    if (cp < 0xc0) return CharKind::separator; // Latin-1 punctuation/symbols
    if (cp <= 0xff) {
        if (cp == 0xd7 || cp == 0xf7) return CharKind::separator;
        if (cp >= 0xc0 && cp <= 0xde) cp += 0x20;
        return CharKind::letter;
    }
    if (cp >= 0x2000 && cp <= 0x206f) return CharKind::separator; // general punctuation
    if (cp >= 0x2e00 && cp <= 0x2e7f) return CharKind::separator; // supplemental punctuation
    if (cp >= 0x3000 && cp <= 0x303f) return CharKind::separator; // CJK punctuation
    if (cp == 0xfffd) return CharKind::separator;
    return CharKind::letter;
}

// Strips leading/trailing apostrophes; the builder below only ever puts
// apostrophes and folded letters into `raw`.
void flush_token(std::string& raw, std::vector<std::string>& out) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && raw[begin] == '\'') ++begin;
    while (end > begin && raw[end - 1] == '\'') --end;
    if (end > begin) out.emplace_back(raw.substr(begin, end - begin));
    raw.clear();
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t len = 0;
        std::uint32_t cp = decode_utf8(text, pos, len);
        switch (classify(cp)) {
        case CharKind::separator:
            if (!current.empty()) flush_token(current, tokens);
            break;
        case CharKind::apostrophe:
            current.push_back('\'');
            break;
        case CharKind::letter:
            encode_utf8(cp, current);
            break;
        }
        pos += len;
    }
    if (!current.empty()) flush_token(current, tokens);
    return tokens;
}

std::string normalize_token(std::string_view word) {
    auto tokens = tokenize(word);
    return tokens.empty() ? std::string{} : std::move(tokens.front());
}

Phrase normalize_phrase(std::string_view text) {
    return Phrase{tokenize(text)};
}

std::size_t utf8_unit_length(std::string_view text, std::size_t pos) {
    std::size_t len = 0;
    decode_utf8(text, pos, len);
    return len;
}

std::string Phrase::text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

} // namespace lexrag
