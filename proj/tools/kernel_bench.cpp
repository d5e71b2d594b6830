// kernel_bench — times the OpenMP kernels against their serial reference
// implementations on a synthetic corpus and verifies they produce identical
// output. Usage: kernel_bench [--sentences N] [--reps N] [--noise-chars N]

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lexrag/corpus.hpp"
#include "lexrag/noise.hpp"
#include "lexrag/reference.hpp"
#include "lexrag/retrieval.hpp"
#include "lexrag/rng.hpp"

using namespace lexrag;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <class Fn> double best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_s();
        fn();
        const double dt = now_s() - t0;
        if (dt < best)
            best = dt;
    }
    return best;
}

int mismatches = 0;

void report(const char* name, bool equal, double serial_s, double parallel_s) {
    if (!equal)
        ++mismatches;
    std::printf("%-12s %-8s serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n", name,
                equal ? "OK" : "MISMATCH", serial_s * 1e3, parallel_s * 1e3,
                parallel_s > 0 ? serial_s / parallel_s : 0.0);
}

/// Synthetic prose: fixed-seed word salad with ., ! and ? boundaries and a
/// sprinkling of abbreviations so the guard logic is actually exercised.
std::string synth_text(std::size_t sentences, std::uint64_t seed) {
    SplitMix rng(seed);
    static const char* const kWords[] = {
        "river",  "stone",   "lantern", "harbor", "signal", "copper",  "meadow", "draft",
        "sigh",   "sighs",   "sighed",  "count",  "vessel", "thread",  "onward", "quiet",
        "ember",  "glacier", "motive",  "ledger", "sketch", "tunnel",  "barrel", "precise",
        "velvet", "anchor",  "fathom",  "ritual", "sudden", "harvest", "willow", "hinge"};
    constexpr std::size_t kVocab = sizeof(kWords) / sizeof(kWords[0]);
    std::string text;
    text.reserve(sentences * 64);
    for (std::size_t s = 0; s < sentences; ++s) {
        const std::size_t len = 4 + rng.next() % 12;
        for (std::size_t w = 0; w < len; ++w) {
            if (w)
                text += ' ';
            if (w == 0 && rng.next() % 23 == 0)
                text += "Dr. ";
            std::string word = kWords[rng.next() % kVocab];
            if (w == 0)
                word[0] = static_cast<char>(word[0] - 'a' + 'A');
            text += word;
        }
        const std::uint64_t punct = rng.next() % 10;
        text += punct < 8 ? '.' : (punct == 8 ? '!' : '?');
        text += s % 17 == 16 ? '\n' : ' ';
    }
    return text;
}

bool same_postings(const SentenceIndex::PostingsMap& a, const SentenceIndex::PostingsMap& b) {
    if (a.size() != b.size())
        return false;
    for (const auto& [term, list] : a) {
        const auto it = b.find(term);
        if (it == b.end() || it->second != list)
            return false;
    }
    return true;
}

bool same_hits(const std::vector<ScoredSentence>& a, const std::vector<ScoredSentence>& b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].index != b[i].index || a[i].score != b[i].score)
            return false;
    return true;
}

} // namespace

int main(int argc, char** argv) {
    std::size_t sentences = 20000;
    int reps = 3;
    std::size_t noise_chars = 2'000'000;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--sentences") && i + 1 < argc)
            sentences = std::strtoull(argv[++i], nullptr, 10);
        else if (!std::strcmp(argv[i], "--reps") && i + 1 < argc)
            reps = std::atoi(argv[++i]);
        else if (!std::strcmp(argv[i], "--noise-chars") && i + 1 < argc)
            noise_chars = std::strtoull(argv[++i], nullptr, 10);
        else {
            std::fprintf(stderr, "usage: %s [--sentences N] [--reps N] [--noise-chars N]\n",
                         argv[0]);
            return 1;
        }
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif
    const std::string text = synth_text(sentences, 0xbe5c0de);
    std::printf("corpus: %zu sentences, %.1f MiB\n\n", sentences,
                static_cast<double>(text.size()) / (1024.0 * 1024.0));

    // segmentation + tokenization
    Document doc, doc_ref;
    const double seg_par = best_of(reps, [&] { doc = make_document("bench", text); });
    const double seg_ser = best_of(reps, [&] { doc_ref = ref::make_document("bench", text); });
    bool seg_equal = doc.sentences.size() == doc_ref.sentences.size();
    for (std::size_t i = 0; seg_equal && i < doc.sentences.size(); ++i)
        seg_equal = doc.sentences[i].byte_start == doc_ref.sentences[i].byte_start &&
                    doc.sentences[i].byte_end == doc_ref.sentences[i].byte_end &&
                    doc.sentences[i].tokens == doc_ref.sentences[i].tokens;
    report("segment", seg_equal, seg_ser, seg_par);

    // inverted index construction
    SentenceIndex index;
    SentenceIndex::PostingsMap postings_ref;
    const double idx_par = best_of(reps, [&] { index = build_index(doc); });
    const double idx_ser = best_of(reps, [&] { postings_ref = ref::build_postings(doc); });
    report("index", same_postings(index.raw(), postings_ref), idx_ser, idx_par);

    // top-k collection
    const TermSet terms = make_term_set(
        std::vector<std::string>{"river stone", "sigh", "copper lantern", "harvest", "glacier",
                                 "velvet anchor", "ledger", "quiet ember"},
        TermOrigin::initial);
    std::vector<ScoredSentence> hits, hits_ref;
    const double top_par = best_of(reps, [&] { hits = collect_topk(index, doc, terms, 50); });
    const double top_ser = best_of(reps, [&] { hits_ref = ref::collect_topk(doc, terms, 50); });
    report("topk", same_hits(hits, hits_ref), top_ser, top_par);

    // occurrence counting
    const std::vector<Phrase> variants = {normalize_phrase("sigh"), normalize_phrase("sighs"),
                                          normalize_phrase("sighed"),
                                          normalize_phrase("river stone")};
    CountResult counts, counts_ref;
    const double cnt_par = best_of(reps, [&] { counts = count_occurrences(doc, variants); });
    const double cnt_ser =
        best_of(reps, [&] { counts_ref = ref::count_occurrences(doc, variants); });
    report("count",
           counts.total == counts_ref.total && counts.per_variant == counts_ref.per_variant,
           cnt_ser, cnt_par);

    // noise injection
    const std::string noise_input(text.data(), std::min(noise_chars, text.size()));
    NoiseSpec spec;
    spec.lambda = 0.3;
    spec.seed = 77;
    std::string noised, noised_ref;
    const double noise_par = best_of(reps, [&] { noised = inject_noise(noise_input, spec); });
    const double noise_ser =
        best_of(reps, [&] { noised_ref = ref::inject_noise(noise_input, spec); });
    report("noise", noised == noised_ref, noise_ser, noise_par);

    if (mismatches) {
        std::fprintf(stderr, "\n%d kernel(s) disagree with the serial reference\n", mismatches);
        return 1;
    }
    std::printf("\nall kernels match the serial reference\n");
    return 0;
}
