#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "lexrag/corpus.hpp"
#include "lexrag/errors.hpp"
#include "lexrag/importance.hpp"
#include "lexrag/llm.hpp"
#include "lexrag/retrieval.hpp"
#include "lexrag/similarity.hpp"

namespace lexrag {

struct BackendSettings {
    std::string model_url = "http://localhost:8000";
    std::string model = "llama-3.1-8b-instruct";
    double temperature = 0.7;
    double timeout_s = 120.0;
    std::string scripted_fixture; // when set, replaces the HTTP backend
    std::string embed_url;        // embedding endpoint, "embedding" similarity only
    std::string embed_model = "bge-m3";
};

struct PipelineConfig {
    std::size_t recall_index = 25;    // K of the top-K collection
    std::uint32_t neighbor_num = 5;   // context radius; 2 reproduces the reported runs
    std::size_t deep_search_index = 5; // top chunks fed to depth extension
    std::size_t deep_search_num = 10;  // max new terms accepted per extension round
    std::size_t voter_num = 10;
    std::size_t iter_max = 5;
    std::size_t importance_samples = 3;
    std::uint64_t seed = 42;
    std::string similarity_backend = "lexical"; // or "embedding"
    BackendSettings backend;
    std::string transcript_log; // JSONL path; empty disables logging

    /// Throws ConfigError when any count is zero or a name is unknown.
    void validate() const;
};

/// One round of the retrieve→score→judge loop, for the report.
struct IterationTrace {
    std::size_t iteration = 0; // 1-based
    std::vector<std::string> terms; // cumulative terms in play this round
    std::vector<Chunk> chunks;      // merged chunks after collection
    std::vector<double> importance; // aligned with chunks
    bool judged = false;            // false when nothing was retrieved
    bool sufficient = false;
    std::string rationale;
};

struct CountingTrace {
    Phrase phrase;
    std::vector<std::string> variants;
    std::vector<std::uint64_t> per_variant;
    std::uint64_t total = 0;
};

struct PhaseTimings {
    double prepare_s = 0.0;
    double retrieve_s = 0.0;
    double generate_s = 0.0;
};

struct AnswerReport {
    std::string final_answer;
    std::string path = "standard"; // "counting" | "standard"
    bool low_confidence = false;   // budget exhausted with nothing retrieved
    std::size_t iterations = 0;
    std::vector<IterationTrace> trace;
    std::optional<CountingTrace> counting;
    PhaseTimings timings;

    /// Timings vary run to run; exclude them to compare reports structurally.
    nlohmann::json to_json(bool include_timings = true) const;
};

/// A backend error that surfaced mid-query; carries whatever the pipeline
/// had already assembled.
class PipelineError : public Error {
public:
    PipelineError(const std::string& what, AnswerReport partial)
        : Error(what), partial_(std::move(partial)) {}
    const AnswerReport& partial() const { return partial_; }

private:
    AnswerReport partial_;
};

struct PreparedDocument {
    Document doc;
    SentenceIndex index;
    double prepare_s = 0.0; // segmentation + index build, the only offline work
};

/// Segments, tokenizes and indexes; the T_prepare phase.
PreparedDocument prepare_document(std::string doc_id, std::string raw_text);

std::unique_ptr<SimilarityScorer> make_similarity(const PipelineConfig& config);
Llm make_llm(const PipelineConfig& config);

/// Runs the full flow: counting fast path, else Generation → Collection →
/// Evaluation → Exploration loop → Organizing. Backend errors rethrow as
/// PipelineError with the partial report attached.
AnswerReport answer_query(const PreparedDocument& prepared, const std::string& query,
                          std::span<const Choice> choices, const PipelineConfig& config, Llm& llm,
                          SimilarityScorer& similarity);

/// Convenience overload that builds the backends from the config.
AnswerReport answer_query(const PreparedDocument& prepared, const std::string& query,
                          std::span<const Choice> choices, const PipelineConfig& config);

} // namespace lexrag
