#include "lexrag/corpus.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lexrag/errors.hpp"

namespace lexrag {
namespace {

constexpr std::size_t kParallelScanCutoff = 1 << 14; // bytes
constexpr std::size_t kParallelIndexCutoff = 256;    // sentences

int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

/// Advances past closing quotes/brackets that may follow a terminator.
std::size_t skip_closers(std::string_view s, std::size_t j) {
    while (j < s.size()) {
        const unsigned char c = s[j];
        if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') {
            ++j;
            continue;
        }
        // U+2019 and U+201D, the curly closing quotes
        if (j + 3 <= s.size() && c == 0xe2 && static_cast<unsigned char>(s[j + 1]) == 0x80) {
            const unsigned char b3 = s[j + 2];
            if (b3 == 0x99 || b3 == 0x9d) {
                j += 3;
                continue;
            }
        }
        break;
    }
    return j;
}

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> guard = {
        "mr", "mrs", "ms", "dr", "prof", "rev", "sr", "jr", "st", "mt",
        "e.g", "i.e", "etc", "vs", "a.m", "p.m", "u.s", "ph.d",
    };
    return guard;
}

/// True when the word ending at the period (letters/digits/interior periods,
/// lowercased) is a known abbreviation. Single capitals like "A." are not
/// guarded, so initials still terminate sentences.
bool guarded_abbreviation(std::string_view s, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0) {
        const unsigned char c = s[b - 1];
        if (is_ascii_alnum(c) || c == '.')
            --b;
        else
            break;
    }
    if (b == dot)
        return false;
    std::string word(s.substr(b, dot - b));
    for (char& ch : word)
        if (ch >= 'A' && ch <= 'Z')
            ch = static_cast<char>(ch - 'A' + 'a');
    return abbreviations().contains(word);
}

/// Boundary predicate: does a sentence end at byte i? On success `end` is set
/// one past the terminator and any closing-quote run. Depends only on nearby
/// bytes, so positions can be tested independently and in parallel.
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

std::vector<std::size_t> boundary_ends(std::string_view raw) {
    const std::size_t n = raw.size();
    std::vector<std::size_t> ends;
    const int threads = worker_count();
    if (n >= kParallelScanCutoff && threads > 1) {
        std::vector<std::vector<std::size_t>> local(threads);
#pragma omp parallel num_threads(threads)
        {
#ifdef _OPENMP
            const int tid = omp_get_thread_num();
            const int tn = omp_get_num_threads();
#else
            const int tid = 0;
            const int tn = 1;
#endif
            const std::size_t lo = n * static_cast<std::size_t>(tid) / tn;
            const std::size_t hi = n * (static_cast<std::size_t>(tid) + 1) / tn;
            auto& out = local[tid];
            for (std::size_t i = lo; i < hi; ++i) {
                std::size_t e;
                if (sentence_end(raw, i, e))
                    out.push_back(e);
            }
        }
        // ranges are contiguous and ascending, so concatenation stays sorted
        for (const auto& v : local)
            ends.insert(ends.end(), v.begin(), v.end());
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t e;
            if (sentence_end(raw, i, e))
                ends.push_back(e);
        }
    }
    return ends;
}

} // namespace

std::string_view Document::sentence_text(std::uint32_t i) const {
    const Sentence& s = sentences.at(i);
    return std::string_view(raw_text).substr(s.byte_start, s.byte_end - s.byte_start);
}

std::string_view Document::span_text(std::uint32_t first, std::uint32_t last) const {
    if (first > last || last >= sentences.size())
        throw std::out_of_range("span_text: invalid sentence range");
    const std::size_t a = sentences[first].byte_start;
    const std::size_t b = sentences[last].byte_end;
    return std::string_view(raw_text).substr(a, b - a);
}

std::vector<Sentence> segment_sentences(std::string_view raw_text) {
    const std::size_t n = raw_text.size();
    std::vector<Sentence> sentences;
    auto skip_ws = [&](std::size_t p) {
        while (p < n && is_space(raw_text[p]))
            ++p;
        return p;
    };
    std::size_t cur = skip_ws(0);
    std::uint32_t idx = 0;
    for (const std::size_t e : boundary_ends(raw_text)) {
        if (e <= cur)
            continue;
        sentences.push_back(Sentence{idx++, cur, e, {}});
        cur = skip_ws(e);
    }
    if (cur < n) {
        std::size_t end = n;
        while (end > cur && is_space(raw_text[end - 1]))
            --end;
        sentences.push_back(Sentence{idx++, cur, end, {}});
    }
    return sentences;
}

Document make_document(std::string doc_id, std::string raw_text) {
    Document doc;
    doc.doc_id = std::move(doc_id);
    doc.raw_text = std::move(raw_text);
    doc.sentences = segment_sentences(doc.raw_text);
    const std::string_view raw(doc.raw_text);
    const auto count = static_cast<std::int64_t>(doc.sentences.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        Sentence& s = doc.sentences[static_cast<std::size_t>(i)];
        s.tokens = tokenize(raw.substr(s.byte_start, s.byte_end - s.byte_start));
    }
    return doc;
}

const std::vector<std::uint32_t>* SentenceIndex::postings(std::string_view token) const {
    const auto it = postings_.find(token);
    return it == postings_.end() ? nullptr : &it->second;
}

SentenceIndex build_index(const Document& doc) {
    SentenceIndex index;
    index.doc_id_ = doc.doc_id;
    const std::size_t m = doc.sentences.size();

    auto add_range = [&doc](SentenceIndex::PostingsMap& map, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Sentence& s = doc.sentences[i];
            for (const std::string& tok : s.tokens) {
                auto& list = map[tok];
                if (list.empty() || list.back() != s.index)
                    list.push_back(s.index);
            }
        }
    };

    const int threads = worker_count();
    if (m >= kParallelIndexCutoff && threads > 1) {
        std::vector<SentenceIndex::PostingsMap> local(threads);
#pragma omp parallel num_threads(threads)
        {
#ifdef _OPENMP
            const int tid = omp_get_thread_num();
            const int tn = omp_get_num_threads();
#else
            const int tid = 0;
            const int tn = 1;
#endif
            const std::size_t lo = m * static_cast<std::size_t>(tid) / tn;
            const std::size_t hi = m * (static_cast<std::size_t>(tid) + 1) / tn;
            add_range(local[tid], lo, hi);
        }
        // merge in thread order: per-thread ranges are contiguous, so every
        // postings list stays strictly increasing
        for (auto& part : local) {
            for (auto& [tok, list] : part) {
                auto& dst = index.postings_[tok];
                dst.insert(dst.end(), list.begin(), list.end());
            }
        }
    } else {
        add_range(index.postings_, 0, m);
    }
    return index;
}

bool contains_phrase(std::span<const std::string> tokens, const Phrase& phrase) {
    const auto& pt = phrase.tokens;
    if (pt.empty() || pt.size() > tokens.size())
        return false;
    return std::search(tokens.begin(), tokens.end(), pt.begin(), pt.end()) != tokens.end();
}

CountResult count_occurrences(const Document& doc, std::span<const Phrase> variants) {
    for (const Phrase& v : variants)
        if (v.tokens.empty())
            throw EmptyVariantError("count_occurrences: variant normalizes to no tokens");

    // One flat token stream for the whole document; inter-sentence gaps are
    // whitespace only, so phrase matches may cross sentence boundaries.
    std::size_t total_tokens = 0;
    for (const Sentence& s : doc.sentences)
        total_tokens += s.tokens.size();
    std::vector<const std::string*> stream;
    stream.reserve(total_tokens);
    for (const Sentence& s : doc.sentences)
        for (const std::string& tok : s.tokens)
            stream.push_back(&tok);

    CountResult result;
    result.per_variant.assign(variants.size(), 0);
    const auto nv = static_cast<std::int64_t>(variants.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < nv; ++k) {
        const auto& vt = variants[static_cast<std::size_t>(k)].tokens;
        const auto eq = [](const std::string* a, const std::string& b) { return *a == b; };
        std::uint64_t count = 0;
        auto it = stream.cbegin();
        while (true) {
            it = std::search(it, stream.cend(), vt.cbegin(), vt.cend(), eq);
            if (it == stream.cend())
                break;
            ++count;
            it += static_cast<std::ptrdiff_t>(vt.size()); // non-overlapping, greedy left-to-right
        }
        result.per_variant[static_cast<std::size_t>(k)] = count;
    }
    for (const std::uint64_t c : result.per_variant)
        result.total += c;
    return result;
}

} // namespace lexrag
