#include "lexrag/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <unordered_map>

#include "lexrag/rng.hpp"

namespace lexrag {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

/// Exact numeric match between the occurrence total and a choice's text.
const Choice* match_numeric_choice(std::span<const Choice> choices, std::uint64_t total) {
    const std::string text = std::to_string(total);
    for (const Choice& c : choices) {
        const std::string t = trimmed(c.text);
        if (t == text)
            return &c;
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
        if (errno == 0 && end != t.c_str() && end && *end == '\0' && v == total)
            return &c;
    }
    return nullptr;
}

nlohmann::json chunk_to_json(const Chunk& c) {
    return {
        {"span", {c.span_first, c.span_last}},
        {"center", c.center_sentence},
        {"score", c.score},
        {"round", c.round},
        {"text", c.text},
    };
}

} // namespace

void PipelineConfig::validate() const {
    if (recall_index == 0 || deep_search_index == 0 || deep_search_num == 0 || voter_num == 0 ||
        iter_max == 0 || importance_samples == 0)
        throw ConfigError("pipeline counts must all be >= 1");
    if (similarity_backend != "lexical" && similarity_backend != "embedding")
        throw ConfigError("unknown similarity backend: " + similarity_backend);
    if (similarity_backend == "embedding" && backend.embed_url.empty())
        throw ConfigError("embedding similarity requires an embedding endpoint URL");
    if (backend.temperature < 0.0)
        throw ConfigError("temperature must be >= 0");
    if (backend.timeout_s <= 0.0)
        throw ConfigError("timeout must be positive");
}

nlohmann::json AnswerReport::to_json(bool include_timings) const {
    nlohmann::json j = {
        {"answer", final_answer},
        {"path", path},
        {"low_confidence", low_confidence},
        {"iterations", iterations},
    };
    nlohmann::json rounds = nlohmann::json::array();
    for (const IterationTrace& tr : trace) {
        nlohmann::json chunks = nlohmann::json::array();
        for (const Chunk& c : tr.chunks)
            chunks.push_back(chunk_to_json(c));
        rounds.push_back({
            {"iteration", tr.iteration},
            {"terms", tr.terms},
            {"chunks", std::move(chunks)},
            {"importance", tr.importance},
            {"judged", tr.judged},
            {"sufficient", tr.sufficient},
            {"rationale", tr.rationale},
        });
    }
    j["trace"] = std::move(rounds);
    if (counting) {
        j["counting"] = {
            {"phrase", counting->phrase.text()},
            {"variants", counting->variants},
            {"per_variant", counting->per_variant},
            {"total", counting->total},
        };
    } else {
        j["counting"] = nullptr;
    }
    if (include_timings)
        j["timings"] = {
            {"prepare_s", timings.prepare_s},
            {"retrieve_s", timings.retrieve_s},
            {"generate_s", timings.generate_s},
        };
    return j;
}

PreparedDocument prepare_document(std::string doc_id, std::string raw_text) {
    PreparedDocument prepared;
    const auto t0 = Clock::now();
    prepared.doc = make_document(std::move(doc_id), std::move(raw_text));
    prepared.index = build_index(prepared.doc);
    prepared.prepare_s = seconds_between(t0, Clock::now());
    return prepared;
}

std::unique_ptr<SimilarityScorer> make_similarity(const PipelineConfig& config) {
    config.validate();
    if (config.similarity_backend == "embedding")
        return std::make_unique<EmbeddingCosineScorer>(config.backend.embed_url,
                                                       config.backend.embed_model,
                                                       config.backend.timeout_s);
    return std::make_unique<LexicalCosineScorer>();
}

Llm make_llm(const PipelineConfig& config) {
    config.validate();
    std::shared_ptr<ChatTransport> transport;
    if (!config.backend.scripted_fixture.empty())
        transport = ScriptedTransport::from_file(config.backend.scripted_fixture);
    else
        transport = std::make_shared<HttpChatTransport>(config.backend.model_url,
                                                        config.backend.model,
                                                        config.backend.timeout_s);
    auto transcript = std::make_shared<Transcript>();
    if (!config.transcript_log.empty())
        transcript->open_log(config.transcript_log);
    return Llm(std::move(transport), config.backend.temperature, std::move(transcript));
}

AnswerReport answer_query(const PreparedDocument& prepared, const std::string& query,
                          std::span<const Choice> choices, const PipelineConfig& config, Llm& llm,
                          SimilarityScorer& similarity) {
    config.validate();
    if (query.empty())
        throw ConfigError("query must be non-empty");

    const Document& doc = prepared.doc;
    AnswerReport report;
    report.timings.prepare_s = prepared.prepare_s;
    const auto t0 = Clock::now();

    try {
        // ── counting fast path ────────────────────────────────────────────
        const CountingDecision detect = llm.detect_counting(query);
        if (detect.counting) {
            const std::vector<Phrase> variants = llm.expand_variants(detect.phrase);
            const CountResult counts = count_occurrences(doc, variants);
            CountingTrace ct;
            ct.phrase = detect.phrase;
            for (const Phrase& v : variants)
                ct.variants.push_back(v.text());
            ct.per_variant = counts.per_variant;
            ct.total = counts.total;
            report.counting = std::move(ct);

            const Choice* picked =
                choices.empty() ? nullptr : match_numeric_choice(choices, counts.total);
            if (choices.empty() || picked) {
                report.final_answer = picked ? picked->label : std::to_string(counts.total);
                report.path = "counting";
                report.timings.retrieve_s = seconds_between(t0, Clock::now());
                return report; // skip all later phases
            }
            // the count matches no choice: fall through to the standard path
        }

        // ── Generation ────────────────────────────────────────────────────
        TermSet used = llm.generate_terms(query);

        // ── Collection / Evaluation / Exploration loop ───────────────────
        std::unordered_map<std::uint32_t, std::uint32_t> first_round;
        std::vector<Chunk> merged;
        bool sufficient = false;
        std::size_t iter = 0;
        while (true) {
            ++iter;
            IterationTrace tr;
            tr.iteration = iter;
            for (const Phrase& p : used.terms)
                tr.terms.push_back(p.text());

            // cumulative: all terms so far, whole document, every round
            const std::vector<ScoredSentence> ranked =
                collect_topk(prepared.index, doc, used, config.recall_index);
            std::vector<Chunk> chunks;
            chunks.reserve(ranked.size());
            for (const ScoredSentence& hit : ranked) {
                const auto [pos, inserted] =
                    first_round.try_emplace(hit.index, static_cast<std::uint32_t>(iter));
                chunks.push_back(expand_context(doc, hit.index, config.neighbor_num, hit.score,
                                                pos->second));
            }
            merged = merge_chunks(doc, chunks);
            tr.chunks = merged;

            if (merged.empty()) {
                // nothing retrieved: judging would violate its precondition
                sufficient = false;
            } else {
                const ImportanceReport imp =
                    score_all(merged, query, llm, similarity, config.importance_samples,
                              mix64(config.seed, iter));
                tr.importance = imp.scores();
                const LlmDecision decision =
                    llm.judge_sufficiency(query, merged, tr.importance);
                tr.judged = true;
                tr.sufficient = decision.sufficient;
                tr.rationale = decision.rationale;
                sufficient = decision.sufficient;
            }
            report.trace.push_back(std::move(tr));
            report.iterations = iter;
            if (sufficient || iter >= config.iter_max)
                break;

            // breadth first, then depth over the highest-scored chunks; one
            // shared per-round acceptance cap
            const TermSet breadth = llm.breadth_extend(query, used, merged);
            std::vector<Chunk> by_score = merged;
            std::stable_sort(by_score.begin(), by_score.end(), [](const Chunk& a, const Chunk& b) {
                if (a.score != b.score)
                    return a.score > b.score;
                return a.span_first < b.span_first;
            });
            if (by_score.size() > config.deep_search_index)
                by_score.resize(config.deep_search_index);
            const TermSet depth = llm.depth_extend(by_score);

            std::vector<Phrase> proposals = breadth.terms;
            proposals.insert(proposals.end(), depth.terms.begin(), depth.terms.end());
            accumulate_terms(used, proposals, config.deep_search_num);
        }

        // ── Organizing ────────────────────────────────────────────────────
        const auto t_gen = Clock::now();
        report.timings.retrieve_s = seconds_between(t0, t_gen);
        report.low_confidence = merged.empty();
        report.final_answer = llm.vote(query, merged, choices, config.voter_num);
        report.timings.generate_s = seconds_between(t_gen, Clock::now());
        return report;
    } catch (const Error& e) {
        report.timings.retrieve_s = seconds_between(t0, Clock::now());
        throw PipelineError(e.what(), std::move(report));
    }
}

AnswerReport answer_query(const PreparedDocument& prepared, const std::string& query,
                          std::span<const Choice> choices, const PipelineConfig& config) {
    Llm llm = make_llm(config);
    const auto similarity = make_similarity(config);
    return answer_query(prepared, query, choices, config, llm, *similarity);
}

} // namespace lexrag
