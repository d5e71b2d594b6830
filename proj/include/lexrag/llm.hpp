#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexrag/retrieval.hpp"
#include "lexrag/text.hpp"

namespace lexrag {

struct TranscriptEntry {
    std::string tag;
    std::string system_prompt;
    std::string user_prompt;
    std::string response;
    double latency_ms = 0.0;
};

/// Append-only, internally synchronized record of every model exchange.
/// Optionally mirrors entries to a JSON-lines file as they happen.
class Transcript {
public:
    void record(TranscriptEntry entry);
    std::vector<TranscriptEntry> entries() const;
    std::size_t size() const;
    /// Number of recorded calls with this tag.
    std::size_t count(std::string_view tag) const;
    /// Mirror subsequent entries to a JSON-lines file (one object per line).
    void open_log(const std::string& path);

private:
    mutable std::mutex mutex_;
    std::vector<TranscriptEntry> entries_;
    std::string log_path_;
};

/// One chat-completion round trip. Implementations are thread-safe.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const std::string& system_prompt, const std::string& user_prompt,
                                 const std::string& tag, double temperature) = 0;
    virtual std::string describe() const = 0;
};

/// Talks to a chat-completions-style JSON HTTP endpoint
/// (POST {base_url}/v1/chat/completions).
class HttpChatTransport final : public ChatTransport {
public:
    HttpChatTransport(std::string base_url, std::string model, double timeout_s = 120.0);

    std::string complete(const std::string& system_prompt, const std::string& user_prompt,
                         const std::string& tag, double temperature) override;
    std::string describe() const override { return "http:" + base_url_ + "#" + model_; }

private:
    std::string base_url_;
    std::string model_;
    double timeout_s_;
};

/// Deterministic mock: replays canned responses keyed by (tag, ordinal).
/// Running past the end of a tag's list throws ScriptExhaustedError — never
/// silent reuse, so tests count calls exactly.
class ScriptedTransport final : public ChatTransport {
public:
    explicit ScriptedTransport(std::map<std::string, std::vector<std::string>> script);

    /// Loads a JSON fixture: an object mapping tag → array of response strings.
    static std::shared_ptr<ScriptedTransport> from_file(const std::string& path);

    std::string complete(const std::string& system_prompt, const std::string& user_prompt,
                         const std::string& tag, double temperature) override;
    std::string describe() const override { return "scripted"; }

private:
    std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> script_;
    std::map<std::string, std::size_t> cursor_;
};

struct CountingDecision {
    bool counting = false;
    Phrase phrase; // the single phrase of interest, when counting
};

struct LlmDecision {
    bool sufficient = false;
    std::string rationale;
};

struct Choice {
    std::string label; // e.g. "A"
    std::string text;
};

/// The prompt-level operations the pipeline delegates to the model. Every
/// parsed operation demands a machine-readable reply format and re-asks once
/// before raising ParseFailureError. Call tags: detect, variants, terms,
/// judge, breadth, depth, answer.
class Llm {
public:
    Llm(std::shared_ptr<ChatTransport> transport, double temperature = 0.7,
        std::shared_ptr<Transcript> transcript = nullptr);

    /// Raw round trip; records the exchange in the transcript.
    std::string chat(const std::string& system_prompt, const std::string& user_prompt,
                     const std::string& tag);

    /// Does the query require exact occurrence counting? Reply format:
    /// "COUNTING: <phrase>" or "NORMAL".
    CountingDecision detect_counting(const std::string& query);

    /// Morphological variants of the counting phrase; the original is always
    /// first. Reply format: semicolon-separated list.
    std::vector<Phrase> expand_variants(const Phrase& phrase);

    /// Initial target terms for the query. Reply format: semicolon-separated.
    TermSet generate_terms(const std::string& query);

    /// Is the retrieved context enough to answer? Prompt shows each chunk
    /// with its importance score. Reply format: "SUFFICIENT" or
    /// "INSUFFICIENT: <why>".
    LlmDecision judge_sufficiency(const std::string& query, std::span<const Chunk> chunks,
                                  std::span<const double> importance);

    /// Expanded term list given the query, prior terms and current chunks.
    TermSet breadth_extend(const std::string& query, const TermSet& prev_terms,
                           std::span<const Chunk> chunks);

    /// Secondary terms mined from the retrieved chunks alone.
    TermSet depth_extend(std::span<const Chunk> chunks);

    /// Final answer. With choices, the reply is constrained to a choice label
    /// ("Answer: <label>" or a bare label); without, free text passes through.
    std::string trim_and_answer(const std::string& query, std::span<const Chunk> chunks,
                                std::span<const Choice> choices);

    /// Majority label over n_voters trim_and_answer samples; ties go to the
    /// alphabetically earliest label. Without choices there is nothing to
    /// tally, so a single call is made.
    std::string vote(const std::string& query, std::span<const Chunk> chunks,
                     std::span<const Choice> choices, std::size_t n_voters);

    Transcript& transcript() { return *transcript_; }
    const std::shared_ptr<Transcript>& transcript_ptr() const { return transcript_; }
    double temperature() const { return temperature_; }

private:
    std::shared_ptr<ChatTransport> transport_;
    double temperature_;
    std::shared_ptr<Transcript> transcript_;
};

} // namespace lexrag
