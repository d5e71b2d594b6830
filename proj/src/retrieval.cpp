#include "lexrag/retrieval.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace lexrag {

TermSet make_term_set(std::span<const std::string> raw, TermOrigin origin) {
    TermSet set;
    set.origin = origin;
    std::unordered_set<std::string> seen;
    for (const std::string& r : raw) {
        Phrase p = normalize_phrase(r);
        if (p.empty())
            continue;
        if (seen.insert(p.text()).second)
            set.terms.push_back(std::move(p));
    }
    return set;
}

std::size_t accumulate_terms(TermSet& dst, std::span<const Phrase> src, std::size_t max_new) {
    std::unordered_set<std::string> seen;
    seen.reserve(dst.terms.size());
    for (const Phrase& p : dst.terms)
        seen.insert(p.text());
    std::size_t added = 0;
    for (const Phrase& p : src) {
        if (added >= max_new)
            break;
        if (p.empty())
            continue;
        if (seen.insert(p.text()).second) {
            dst.terms.push_back(p);
            ++added;
        }
    }
    return added;
}

std::uint32_t overlap_score(const Sentence& sentence, const TermSet& terms) {
    std::uint32_t score = 0;
    for (const Phrase& p : terms.terms)
        if (contains_phrase(sentence.tokens, p))
            ++score;
    return score;
}

namespace {

/// Sentences containing the phrase, via the index: single-token phrases read
/// the postings list directly; multi-token phrases verify candidates from the
/// rarest token's postings. Result is sorted ascending.
std::vector<std::uint32_t> matches_for_term(const SentenceIndex& index, const Document& doc,
                                            const Phrase& p) {
    if (p.tokens.size() == 1) {
        const auto* list = index.postings(p.tokens.front());
        return list ? *list : std::vector<std::uint32_t>{};
    }
    const std::vector<std::uint32_t>* shortest = nullptr;
    for (const std::string& tok : p.tokens) {
        const auto* list = index.postings(tok);
        if (!list)
            return {}; // some token absent everywhere → phrase matches nothing
        if (!shortest || list->size() < shortest->size())
            shortest = list;
    }
    std::vector<std::uint32_t> out;
    for (const std::uint32_t i : *shortest)
        if (contains_phrase(doc.sentences[i].tokens, p))
            out.push_back(i);
    return out;
}

} // namespace

std::vector<ScoredSentence> collect_topk(const SentenceIndex& index, const Document& doc,
                                         const TermSet& terms, std::size_t k) {
    const auto nt = static_cast<std::int64_t>(terms.terms.size());
    std::vector<std::vector<std::uint32_t>> per_term(terms.terms.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < nt; ++t)
        per_term[static_cast<std::size_t>(t)] =
            matches_for_term(index, doc, terms.terms[static_cast<std::size_t>(t)]);

    // Terms are deduplicated, so each contributes at most one point per sentence.
    std::unordered_map<std::uint32_t, std::uint32_t> scores;
    for (const auto& matches : per_term)
        for (const std::uint32_t i : matches)
            ++scores[i];

    std::vector<ScoredSentence> ranked;
    ranked.reserve(scores.size());
    for (const auto& [i, s] : scores)
        ranked.push_back(ScoredSentence{i, s});
    const auto better = [](const ScoredSentence& a, const ScoredSentence& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.index < b.index;
    };
    if (ranked.size() > k) {
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k),
                          ranked.end(), better);
        ranked.resize(k);
    } else {
        std::sort(ranked.begin(), ranked.end(), better);
    }
    return ranked;
}

Chunk expand_context(const Document& doc, std::uint32_t hit, std::uint32_t radius,
                     std::uint32_t score, std::uint32_t round) {
    const auto count = static_cast<std::uint32_t>(doc.sentences.size());
    Chunk c;
    c.doc_id = doc.doc_id;
    c.center_sentence = hit;
    c.span_first = hit > radius ? hit - radius : 0;
    c.span_last = std::min(count - 1, hit + radius);
    c.text = std::string(doc.span_text(c.span_first, c.span_last));
    c.score = score;
    c.round = round;
    return c;
}

std::vector<Chunk> merge_chunks(const Document& doc, std::vector<Chunk> chunks) {
    if (chunks.empty())
        return chunks;
    std::sort(chunks.begin(), chunks.end(), [](const Chunk& a, const Chunk& b) {
        if (a.span_first != b.span_first)
            return a.span_first < b.span_first;
        return a.span_last < b.span_last;
    });
    std::vector<Chunk> merged;
    merged.push_back(std::move(chunks.front()));
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        Chunk& cur = merged.back();
        Chunk& next = chunks[i];
        if (next.span_first <= cur.span_last + 1) {
            cur.span_last = std::max(cur.span_last, next.span_last);
            if (next.score > cur.score) {
                cur.score = next.score;
                cur.center_sentence = next.center_sentence;
            }
            cur.round = std::min(cur.round, next.round);
        } else {
            merged.push_back(std::move(next));
        }
    }
    for (Chunk& c : merged)
        c.text = std::string(doc.span_text(c.span_first, c.span_last));
    return merged;
}

} // namespace lexrag
