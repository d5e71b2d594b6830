#include "lexrag/reference.hpp"

#include <algorithm>
#include <unordered_set>

#include "lexrag/errors.hpp"
#include "lexrag/rng.hpp"
#include "lexrag/text.hpp"

namespace lexrag::ref {
namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::size_t skip_closers(std::string_view s, std::size_t j) {
    while (j < s.size()) {
        const unsigned char c = s[j];
        if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') {
            ++j;
            continue;
        }
        if (j + 3 <= s.size() && c == 0xe2 && static_cast<unsigned char>(s[j + 1]) == 0x80 &&
            (static_cast<unsigned char>(s[j + 2]) == 0x99 ||
             static_cast<unsigned char>(s[j + 2]) == 0x9d)) {
            j += 3;
            continue;
        }
        break;
    }
    return j;
}

bool guarded_abbreviation(std::string_view s, std::size_t dot) {
    static const std::unordered_set<std::string> guard = {
        "mr", "mrs", "ms", "dr", "prof", "rev", "sr", "jr", "st", "mt",
        "e.g", "i.e", "etc", "vs", "a.m", "p.m", "u.s", "ph.d",
    };
    std::size_t b = dot;
    while (b > 0 && (is_ascii_alnum(s[b - 1]) || s[b - 1] == '.'))
        --b;
    if (b == dot)
        return false;
    std::string word(s.substr(b, dot - b));
    for (char& ch : word)
        if (ch >= 'A' && ch <= 'Z')
            ch = static_cast<char>(ch - 'A' + 'a');
    return guard.contains(word);
}

bool sentence_end(std::string_view s, std::size_t i, std::size_t& end) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?')
        return false;
    const std::size_t j = skip_closers(s, i + 1);
    if (j < s.size() && !is_space(s[j]))
        return false;
    if (c == '.' && guarded_abbreviation(s, i))
        return false;
    end = j;
    return true;
}

/// A phrase occurs at tokens[at..at+m)? Plain elementwise comparison.
bool phrase_at(std::span<const std::string> tokens, std::size_t at, const Phrase& p) {
    if (at + p.tokens.size() > tokens.size())
        return false;
    for (std::size_t t = 0; t < p.tokens.size(); ++t)
        if (tokens[at + t] != p.tokens[t])
            return false;
    return true;
}

bool phrase_anywhere(std::span<const std::string> tokens, const Phrase& p) {
    if (p.tokens.empty())
        return false;
    for (std::size_t i = 0; i + p.tokens.size() <= tokens.size(); ++i)
        if (phrase_at(tokens, i, p))
            return true;
    return false;
}

constexpr std::string_view kAlphabet =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

enum class Op : std::uint8_t { substitute, erase, insert, swap };

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

std::vector<Sentence> segment_sentences(std::string_view raw_text) {
    const std::size_t n = raw_text.size();
    std::vector<Sentence> out;
    auto skip_ws = [&](std::size_t p) {
        while (p < n && is_space(raw_text[p]))
            ++p;
        return p;
    };
    std::uint32_t index = 0;
    std::size_t start = skip_ws(0);
    std::size_t pos = start;
    while (pos < n) {
        std::size_t end;
        if (sentence_end(raw_text, pos, end)) {
            out.push_back(Sentence{index++, start, end, {}});
            start = skip_ws(end);
            pos = start;
        } else {
            ++pos;
        }
    }
    if (start < n) {
        std::size_t end = n;
        while (end > start && is_space(raw_text[end - 1]))
            --end;
        out.push_back(Sentence{index++, start, end, {}});
    }
    return out;
}

Document make_document(std::string doc_id, std::string raw_text) {
    Document doc;
    doc.doc_id = std::move(doc_id);
    doc.raw_text = std::move(raw_text);
    doc.sentences = segment_sentences(doc.raw_text);
    for (Sentence& s : doc.sentences)
        s.tokens = tokenize(std::string_view(doc.raw_text).substr(s.byte_start,
                                                                  s.byte_end - s.byte_start));
    return doc;
}

SentenceIndex::PostingsMap build_postings(const Document& doc) {
    SentenceIndex::PostingsMap postings;
    for (const Sentence& s : doc.sentences) {
        for (const std::string& tok : s.tokens) {
            auto& list = postings[tok];
            if (list.empty() || list.back() != s.index)
                list.push_back(s.index);
        }
    }
    return postings;
}

std::vector<ScoredSentence> collect_topk(const Document& doc, const TermSet& terms,
                                         std::size_t k) {
    std::vector<ScoredSentence> scored;
    for (const Sentence& s : doc.sentences) {
        std::uint32_t score = 0;
        for (const Phrase& p : terms.terms)
            if (phrase_anywhere(s.tokens, p))
                ++score;
        if (score > 0)
            scored.push_back(ScoredSentence{s.index, score});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredSentence& a, const ScoredSentence& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.index < b.index;
    });
    if (scored.size() > k)
        scored.resize(k);
    return scored;
}

CountResult count_occurrences(const Document& doc, std::span<const Phrase> variants) {
    for (const Phrase& v : variants)
        if (v.tokens.empty())
            throw EmptyVariantError("count_occurrences: variant normalizes to no tokens");

    std::vector<std::string> stream;
    for (const Sentence& s : doc.sentences)
        for (const std::string& tok : s.tokens)
            stream.push_back(tok);

    CountResult result;
    for (const Phrase& v : variants) {
        std::uint64_t count = 0;
        std::size_t i = 0;
        while (i + v.tokens.size() <= stream.size()) {
            if (phrase_at(stream, i, v)) {
                ++count;
                i += v.tokens.size();
            } else {
                ++i;
            }
        }
        result.per_variant.push_back(count);
        result.total += count;
    }
    return result;
}

std::string inject_noise(std::string_view text, const NoiseSpec& spec) {
    if (!(spec.lambda > 0.0) || spec.lambda > 1.0)
        throw ConfigError("inject_noise: lambda must be in (0, 1]");
    const std::vector<Op> ops = enabled_ops(spec.ops);
    if (ops.empty())
        throw ConfigError("inject_noise: no noise operations enabled");

    const std::vector<std::string_view> units = utf8_units(text);
    const std::size_t n = units.size();
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < n) {
        if (u01_closed(mix64(spec.seed, 3 * i)) > spec.lambda) {
            out += units[i];
            ++i;
            continue;
        }
        switch (ops[mix64(spec.seed, 3 * i + 1) % ops.size()]) {
        case Op::substitute: {
            std::size_t idx = mix64(spec.seed, 3 * i + 2) % (kAlphabet.size() - 1);
            if (units[i].size() == 1 && units[i][0] == kAlphabet[idx])
                idx = kAlphabet.size() - 1;
            out.push_back(kAlphabet[idx]);
            ++i;
            break;
        }
        case Op::erase:
            ++i;
            break;
        case Op::insert:
            out.push_back(kAlphabet[mix64(spec.seed, 3 * i + 2) % kAlphabet.size()]);
            out += units[i];
            ++i;
            break;
        case Op::swap:
            if (i + 1 < n) {
                out += units[i + 1];
                out += units[i];
                i += 2; // the partner is consumed with it
            } else {
                out += units[i];
                ++i;
            }
            break;
        }
    }
    return out;
}

} // namespace lexrag::ref
