#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lexrag/pipeline.hpp"

using namespace lexrag;

namespace {

using Script = std::map<std::string, std::vector<std::string>>;

const std::string kStory =
    "The harbor town woke early. Mara kept the lighthouse. A brass key opened the lamp room. "
    "She hid the key under the floor. Gulls circled the tower all morning. The merchant asked "
    "about the key. Mara only smiled. Night fell over the quiet harbor.";

const std::string kSighs = "He sighed. A sigh came. Sighs everywhere. The sigh faded.";

PipelineConfig small_config() {
    PipelineConfig c;
    c.recall_index = 2;
    c.neighbor_num = 1;
    c.importance_samples = 1;
    c.voter_num = 1;
    return c;
}

Llm scripted(Script script) {
    return Llm(std::make_shared<ScriptedTransport>(std::move(script)));
}

AnswerReport run(const std::string& text, const std::string& query,
                 const std::vector<Choice>& choices, const PipelineConfig& config, Llm& llm) {
    const PreparedDocument prepared = prepare_document("d", text);
    LexicalCosineScorer lexical;
    return answer_query(prepared, query, choices, config, llm, lexical);
}

std::string fixture(const std::string& name) {
    return std::string(LEXRAG_FIXTURES_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

} // namespace

TEST_CASE("counting questions bypass retrieval entirely") {
    Llm llm = scripted({{"detect", {"COUNTING: sigh"}}, {"variants", {"sigh; sighs; sighed"}}});
    const std::vector<Choice> choices = {{"A", "3"}, {"B", "4"}, {"C", "5"}};
    const AnswerReport report = run(kSighs, "How many times does sigh occur?", choices,
                                    small_config(), llm);

    CHECK(report.final_answer == "B");
    CHECK(report.path == "counting");
    CHECK(report.iterations == 0);
    CHECK(report.trace.empty());
    CHECK(!report.low_confidence);
    REQUIRE(report.counting.has_value());
    CHECK(report.counting->phrase.text() == "sigh");
    CHECK(report.counting->variants == std::vector<std::string>{"sigh", "sighs", "sighed"});
    CHECK(report.counting->per_variant == std::vector<std::uint64_t>{2, 1, 1});
    CHECK(report.counting->total == 4);

    // the fast path makes exactly two model calls and never touches the rest
    CHECK(llm.transcript().count("detect") == 1);
    CHECK(llm.transcript().count("variants") == 1);
    CHECK(llm.transcript().count("terms") == 0);
    CHECK(llm.transcript().count("importance") == 0);
    CHECK(llm.transcript().count("judge") == 0);
    CHECK(llm.transcript().count("breadth") == 0);
    CHECK(llm.transcript().count("depth") == 0);
    CHECK(llm.transcript().count("answer") == 0);
}

TEST_CASE("counting without choices answers with the number itself") {
    Llm llm = scripted({{"detect", {"COUNTING: sigh"}}, {"variants", {"sigh; sighs; sighed"}}});
    const AnswerReport report = run(kSighs, "How many sighs?", {}, small_config(), llm);
    CHECK(report.final_answer == "4");
    CHECK(report.path == "counting");

    // numeric matching tolerates surrounding whitespace in the choice text
    Llm llm2 = scripted({{"detect", {"COUNTING: sigh"}}, {"variants", {"sigh; sighs; sighed"}}});
    const std::vector<Choice> padded = {{"A", "  4 "}, {"B", "6"}};
    CHECK(run(kSighs, "How many sighs?", padded, small_config(), llm2).final_answer == "A");
}

TEST_CASE("a count matching no choice falls back to the standard path") {
    Llm llm = scripted({{"detect", {"COUNTING: sigh"}},
                        {"variants", {"sigh; sighs; sighed"}},
                        {"terms", {"sigh; faded"}},
                        {"importance", {"same", "same", "same", "same"}},
                        {"judge", {"SUFFICIENT"}},
                        {"answer", {"Answer: C"}}});
    const std::vector<Choice> choices = {{"A", "7"}, {"B", "9"}, {"C", "11"}};
    const AnswerReport report =
        run(kSighs, "How many times does sigh occur?", choices, small_config(), llm);

    CHECK(report.final_answer == "C");
    CHECK(report.path == "standard");
    CHECK(report.iterations == 1);
    REQUIRE(report.counting.has_value()); // the counting attempt stays on record
    CHECK(report.counting->total == 4);
    CHECK(llm.transcript().count("terms") == 1);
}

TEST_CASE("standard path: retrieve, merge, score, judge, vote") {
    Llm llm = scripted({{"detect", {"NORMAL"}},
                        {"terms", {"brass key; hid; floor"}},
                        {"importance", {"The key is under the floor.",
                                        "The key is under the floor."}},
                        {"judge", {"SUFFICIENT: the hiding place is stated."}},
                        {"answer", {"Answer: B"}}});
    const std::vector<Choice> choices = {{"A", "in the tower"}, {"B", "under the floor"}};
    const AnswerReport report =
        run(kStory, "Where did Mara hide the key?", choices, small_config(), llm);

    CHECK(report.final_answer == "B");
    CHECK(report.path == "standard");
    CHECK(!report.low_confidence);
    CHECK(report.iterations == 1);
    CHECK(!report.counting.has_value());
    REQUIRE(report.trace.size() == 1);

    const IterationTrace& tr = report.trace[0];
    CHECK(tr.iteration == 1);
    CHECK(tr.terms == std::vector<std::string>{"brass key", "hid", "floor"});
    // hits: sentence 3 (hid + floor, score 2) and sentence 2 (brass key, score 1);
    // radius-1 windows [2,4] and [1,3] merge into one chunk
    REQUIRE(tr.chunks.size() == 1);
    CHECK(tr.chunks[0].span_first == 1);
    CHECK(tr.chunks[0].span_last == 4);
    CHECK(tr.chunks[0].center_sentence == 3);
    CHECK(tr.chunks[0].score == 2);
    CHECK(tr.chunks[0].round == 1);
    CHECK(tr.chunks[0].text ==
          "Mara kept the lighthouse. A brass key opened the lamp room. She hid the key under "
          "the floor. Gulls circled the tower all morning.");
    // identical baseline and perturbed answers: zero importance, exactly
    REQUIRE(tr.importance.size() == 1);
    CHECK(tr.importance[0] == 0.0);
    CHECK(tr.judged);
    CHECK(tr.sufficient);
    CHECK(tr.rationale == "the hiding place is stated.");
    CHECK(report.timings.retrieve_s >= 0.0);
    CHECK(report.timings.generate_s >= 0.0);
}

TEST_CASE("a sentence keeps the round it was first retrieved in") {
    const std::string doc =
        "Alpha anchors the record. Filler line one. Filler line two. Filler line three. "
        "Filler line four. Beta closes the record.";
    PipelineConfig config = small_config();
    config.neighbor_num = 0;
    config.iter_max = 3;
    Llm llm = scripted({{"detect", {"NORMAL"}},
                        {"terms", {"alpha"}},
                        {"importance", {"s", "s", "s", "s", "s", "s"}},
                        {"judge", {"INSUFFICIENT: only the opening", "SUFFICIENT"}},
                        {"breadth", {"beta"}},
                        {"depth", {"gamma"}},
                        {"answer", {"both records"}}});
    const AnswerReport report = run(doc, "what do the records say?", {}, config, llm);

    CHECK(report.iterations == 2);
    REQUIRE(report.trace.size() == 2);
    CHECK(report.trace[0].terms == std::vector<std::string>{"alpha"});
    CHECK(report.trace[1].terms == std::vector<std::string>{"alpha", "beta", "gamma"});
    REQUIRE(report.trace[1].chunks.size() == 2);
    CHECK(report.trace[1].chunks[0].span_first == 0);
    CHECK(report.trace[1].chunks[0].round == 1); // seen in round 1, stays round 1
    CHECK(report.trace[1].chunks[1].span_first == 5);
    CHECK(report.trace[1].chunks[1].round == 2);
    CHECK(report.final_answer == "both records");
}

TEST_CASE("extension proposals are capped per round, breadth first") {
    PipelineConfig config = small_config();
    config.iter_max = 2;
    config.deep_search_num = 2;
    Llm llm = scripted({{"detect", {"NORMAL"}},
                        {"terms", {"brass key"}},
                        {"importance", {"s", "s", "s", "s"}},
                        {"judge", {"INSUFFICIENT: more", "INSUFFICIENT: still more"}},
                        {"breadth", {"merchant; gulls; lighthouse"}},
                        {"depth", {"harbor; night"}},
                        {"answer", {"done"}}});
    const AnswerReport report = run(kStory, "q", {}, config, llm);

    REQUIRE(report.trace.size() == 2);
    // of the five proposals only the first two fit under the cap
    CHECK(report.trace[1].terms ==
          std::vector<std::string>{"brass key", "merchant", "gulls"});
    CHECK(report.iterations == 2); // budget exhausted, loop ends
}

TEST_CASE("an always-insufficient judge consumes the whole budget and still answers") {
    PipelineConfig config = small_config();
    config.iter_max = 3;
    Llm llm = scripted({{"detect", {"NORMAL"}},
                        {"terms", {"brass key"}},
                        {"importance", {"s", "s", "s", "s", "s", "s"}},
                        {"judge", {"INSUFFICIENT: a", "INSUFFICIENT: b", "INSUFFICIENT: c"}},
                        {"breadth", {"zeta; eta", "iota"}},
                        {"depth", {"theta", "kappa"}},
                        {"answer", {"best effort"}}});
    const AnswerReport report = run(kStory, "q", {}, config, llm);

    CHECK(report.iterations == 3);
    REQUIRE(report.trace.size() == 3);
    for (const IterationTrace& tr : report.trace) {
        CHECK(tr.judged);
        CHECK(!tr.sufficient);
    }
    CHECK(report.final_answer == "best effort");
    CHECK(!report.low_confidence); // something was retrieved, just never enough
    CHECK(llm.transcript().count("judge") == 3);
    CHECK(llm.transcript().count("breadth") == 2); // no extension after the last round
    CHECK(llm.transcript().count("depth") == 2);
}

TEST_CASE("nothing retrieved: no judging, low-confidence answer") {
    PipelineConfig config = small_config();
    config.iter_max = 2;
    Llm llm = scripted({{"detect", {"NORMAL"}},
                        {"terms", {"quasar"}},
                        {"breadth", {"pulsar"}},
                        {"depth", {"nebula"}},
                        {"answer", {"no idea"}}});
    const AnswerReport report = run(kStory, "what about quasars?", {}, config, llm);

    CHECK(report.low_confidence);
    CHECK(report.final_answer == "no idea");
    CHECK(report.iterations == 2);
    REQUIRE(report.trace.size() == 2);
    for (const IterationTrace& tr : report.trace) {
        CHECK(tr.chunks.empty());
        CHECK(!tr.judged);
        CHECK(!tr.sufficient);
    }
    CHECK(llm.transcript().count("judge") == 0);
    CHECK(llm.transcript().count("importance") == 0);
}

TEST_CASE("scripted runs are bit-identical across reruns") {
    const Script script = {{"detect", {"NORMAL"}},
                           {"terms", {"brass key; hid; floor"}},
                           {"importance", {"x", "x"}},
                           {"judge", {"SUFFICIENT"}},
                           {"answer", {"Answer: A"}}};
    const std::vector<Choice> choices = {{"A", "under the floor"}, {"B", "in the tower"}};
    const PreparedDocument prepared = prepare_document("d", kStory);
    std::string first;
    for (int i = 0; i < 5; ++i) {
        Llm llm = scripted(script);
        LexicalCosineScorer lexical;
        const AnswerReport report =
            answer_query(prepared, "Where is the key?", choices, small_config(), llm, lexical);
        const std::string dump = report.to_json(false).dump();
        if (i == 0)
            first = dump;
        else
            CHECK(dump == first);
    }
    CHECK(!first.empty());
}

TEST_CASE("report JSON carries the trace; timings only on request") {
    Llm llm = scripted({{"detect", {"COUNTING: sigh"}}, {"variants", {"sigh"}}});
    const AnswerReport report = run(kSighs, "How many sighs?", {}, small_config(), llm);
    const nlohmann::json with = report.to_json();
    CHECK(with.contains("timings"));
    CHECK(with["timings"].contains("prepare_s"));
    const nlohmann::json without = report.to_json(false);
    CHECK(!without.contains("timings"));
    CHECK(without["path"] == "counting");
    CHECK(without["counting"]["total"] == 2);
    CHECK(without["trace"].is_array());

    Llm llm2 = scripted({{"detect", {"NORMAL"}},
                         {"terms", {"brass key"}},
                         {"importance", {"x", "x"}},
                         {"judge", {"SUFFICIENT"}},
                         {"answer", {"fine"}}});
    const nlohmann::json standard = run(kStory, "q", {}, small_config(), llm2).to_json(false);
    CHECK(standard["counting"].is_null());
    REQUIRE(standard["trace"].size() == 1);
    CHECK(standard["trace"][0]["chunks"][0].contains("span"));
}

TEST_CASE("backend failures surface as PipelineError with the partial report") {
    // the terms script is missing entirely: fails before any iteration
    Llm llm = scripted({{"detect", {"NORMAL"}}});
    const PreparedDocument prepared = prepare_document("d", kStory);
    LexicalCosineScorer lexical;
    try {
        answer_query(prepared, "q", {}, small_config(), llm, lexical);
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.partial().iterations == 0);
        CHECK(e.partial().trace.empty());
        CHECK(std::string(e.what()).find("terms") != std::string::npos);
    }

    // exhaustion mid-loop: the first iteration survives into the partial
    PipelineConfig config = small_config();
    config.iter_max = 2;
    Llm llm2 = scripted({{"detect", {"NORMAL"}},
                         {"terms", {"brass key"}},
                         {"importance", {"x", "x"}},
                         {"judge", {"INSUFFICIENT: more"}}});
    try {
        answer_query(prepared, "q", {}, config, llm2, lexical);
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.partial().iterations == 1);
        REQUIRE(e.partial().trace.size() == 1);
        CHECK(e.partial().trace[0].judged);
    }
}

TEST_CASE("config validation rejects each bad field") {
    const PreparedDocument prepared = prepare_document("d", kStory);
    Llm llm = scripted({});
    LexicalCosineScorer lexical;

    CHECK_NOTHROW(small_config().validate());
    auto expect_invalid = [](PipelineConfig c) { CHECK_THROWS_AS(c.validate(), ConfigError); };
    { PipelineConfig c; c.recall_index = 0; expect_invalid(c); }
    { PipelineConfig c; c.deep_search_index = 0; expect_invalid(c); }
    { PipelineConfig c; c.deep_search_num = 0; expect_invalid(c); }
    { PipelineConfig c; c.voter_num = 0; expect_invalid(c); }
    { PipelineConfig c; c.iter_max = 0; expect_invalid(c); }
    { PipelineConfig c; c.importance_samples = 0; expect_invalid(c); }
    { PipelineConfig c; c.similarity_backend = "cosine"; expect_invalid(c); }
    { PipelineConfig c; c.similarity_backend = "embedding"; expect_invalid(c); }
    { PipelineConfig c; c.backend.temperature = -0.1; expect_invalid(c); }
    { PipelineConfig c; c.backend.timeout_s = 0.0; expect_invalid(c); }
    {
        PipelineConfig c;
        c.similarity_backend = "embedding";
        c.backend.embed_url = "http://127.0.0.1:1";
        CHECK_NOTHROW(c.validate());
    }

    // an empty query is rejected before any model call
    CHECK_THROWS_AS(answer_query(prepared, "", {}, small_config(), llm, lexical), ConfigError);
    CHECK(llm.transcript().size() == 0);
}

TEST_CASE("config-built backends: scripted fixture, similarity choice") {
    PipelineConfig config = small_config();
    config.backend.scripted_fixture = fixture("script_ask_standard.json");
    const PreparedDocument prepared =
        prepare_document("story", slurp(fixture("story_tiny.txt")));
    const std::vector<Choice> choices = {{"A", "in the tower"}, {"B", "under the floor"}};
    const AnswerReport report =
        answer_query(prepared, "Where did Mara hide the key?", choices, config);
    CHECK(report.final_answer == "B");
    CHECK(report.iterations == 1);

    CHECK(make_similarity(small_config())->name() == "lexical");
    PipelineConfig embed = small_config();
    embed.similarity_backend = "embedding";
    embed.backend.embed_url = "http://127.0.0.1:1";
    CHECK(make_similarity(embed)->name() == "embedding");

    PipelineConfig missing = small_config();
    missing.backend.scripted_fixture = fixture("no_such_script.json");
    CHECK_THROWS_AS(make_llm(missing), ConfigError);
}
