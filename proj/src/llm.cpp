#include "lexrag/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <regex>

#include "httplib.h"
#include "json.hpp"

#include "lexrag/errors.hpp"

namespace lexrag {
namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'a' && c <= 'z')
            c = static_cast<char>(c - 'a' + 'A');
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::string current;
    for (const char c : s) {
        if (c == ';' || c == '\n') {
            items.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    items.push_back(current);
    return items;
}

std::string preview(const std::string& s, std::size_t limit = 120) {
    const std::string t = trim(s);
    return t.size() <= limit ? t : t.substr(0, limit) + "…";
}

std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

/// Renders chunks as numbered blocks, optionally tagged with importance.
std::string render_chunks(std::span<const Chunk> chunks, std::span<const double> importance = {}) {
    if (chunks.empty())
        return "(no relevant context was retrieved)\n\n";
    std::string out;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        out += "[" + std::to_string(i + 1) + "] sentences " +
               std::to_string(chunks[i].span_first) + "-" + std::to_string(chunks[i].span_last);
        if (i < importance.size())
            out += ", importance " + format_score(importance[i]);
        out += "\n" + chunks[i].text + "\n\n";
    }
    return out;
}

std::string render_choices(std::span<const Choice> choices) {
    std::string out;
    for (const Choice& c : choices)
        out += c.label + ") " + c.text + "\n";
    return out;
}

/// Asks once, re-asks once on a format violation, then gives up.
template <typename F>
auto ask_with_retry(Llm& llm, const std::string& tag, const std::string& system_prompt,
                    const std::string& user_prompt, F&& parse, const char* expectation) {
    std::string last;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last = llm.chat(system_prompt, user_prompt, tag);
        if (auto parsed = parse(last))
            return std::move(*parsed);
    }
    throw ParseFailureError(tag + ": model reply violates the expected format (" + expectation +
                            "): \"" + preview(last) + "\"");
}

std::optional<TermSet> parse_term_list(const std::string& response, TermOrigin origin) {
    const std::vector<std::string> items = split_list(response);
    TermSet set = make_term_set(items, origin);
    if (set.terms.empty())
        return std::nullopt;
    return set;
}

} // namespace

void Transcript::record(TranscriptEntry entry) {
    const std::lock_guard<std::mutex> lock(mutex_);
    if (!log_path_.empty()) {
        const nlohmann::json line = {
            {"tag", entry.tag},           {"system", entry.system_prompt},
            {"user", entry.user_prompt},  {"response", entry.response},
            {"latency_ms", entry.latency_ms},
        };
        std::ofstream out(log_path_, std::ios::app);
        out << line.dump() << '\n';
    }
    entries_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> Transcript::entries() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return entries_;
}

std::size_t Transcript::size() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

std::size_t Transcript::count(std::string_view tag) const {
    const std::lock_guard<std::mutex> lock(mutex_);
    std::size_t n = 0;
    for (const TranscriptEntry& e : entries_)
        if (e.tag == tag)
            ++n;
    return n;
}

void Transcript::open_log(const std::string& path) {
    const std::lock_guard<std::mutex> lock(mutex_);
    log_path_ = path;
    std::ofstream out(log_path_, std::ios::trunc); // start fresh
}

HttpChatTransport::HttpChatTransport(std::string base_url, std::string model, double timeout_s)
    : base_url_(std::move(base_url)), model_(std::move(model)), timeout_s_(timeout_s) {}

std::string HttpChatTransport::complete(const std::string& system_prompt,
                                        const std::string& user_prompt, const std::string& tag,
                                        double temperature) {
    (void)tag; // tags matter for the transcript and the scripted mock only

    httplib::Client client(base_url_);
    const auto timeout = std::chrono::milliseconds(static_cast<long>(timeout_s_ * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const nlohmann::json payload = {
        {"model", model_},
        {"temperature", temperature},
        {"messages",
         {{{"role", "system"}, {"content", system_prompt}},
          {{"role", "user"}, {"content", user_prompt}}}},
    };
    const auto res = client.Post("/v1/chat/completions", payload.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            throw TimeoutError("chat endpoint timed out: " + base_url_);
        throw EndpointUnavailableError("chat endpoint unreachable: " + base_url_ + " (" +
                                       httplib::to_string(err) + ")");
    }
    if (res->status != 200)
        throw EndpointUnavailableError("chat endpoint returned HTTP " +
                                       std::to_string(res->status) + ": " + preview(res->body));
    try {
        const auto body = nlohmann::json::parse(res->body);
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseFailureError(std::string("malformed chat response: ") + e.what());
    }
}

ScriptedTransport::ScriptedTransport(std::map<std::string, std::vector<std::string>> script)
    : script_(std::move(script)) {}

std::shared_ptr<ScriptedTransport> ScriptedTransport::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scripted fixture: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
        std::map<std::string, std::vector<std::string>> script;
        for (const auto& [tag, responses] : doc.items())
            script[tag] = responses.get<std::vector<std::string>>();
        return std::make_shared<ScriptedTransport>(std::move(script));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed scripted fixture " + path + ": " + e.what());
    }
}

std::string ScriptedTransport::complete(const std::string& system_prompt,
                                        const std::string& user_prompt, const std::string& tag,
                                        double temperature) {
    (void)system_prompt;
    (void)user_prompt;
    (void)temperature;
    const std::lock_guard<std::mutex> lock(mutex_);
    const auto it = script_.find(tag);
    if (it == script_.end())
        throw ScriptExhaustedError("no scripted responses for tag \"" + tag + "\"");
    std::size_t& cursor = cursor_[tag];
    if (cursor >= it->second.size())
        throw ScriptExhaustedError("script for tag \"" + tag + "\" exhausted after " +
                                   std::to_string(it->second.size()) + " responses");
    return it->second[cursor++];
}

Llm::Llm(std::shared_ptr<ChatTransport> transport, double temperature,
         std::shared_ptr<Transcript> transcript)
    : transport_(std::move(transport)),
      temperature_(temperature),
      transcript_(transcript ? std::move(transcript) : std::make_shared<Transcript>()) {}

std::string Llm::chat(const std::string& system_prompt, const std::string& user_prompt,
                      const std::string& tag) {
    const auto start = std::chrono::steady_clock::now();
    std::string response = transport_->complete(system_prompt, user_prompt, tag, temperature_);
    const auto elapsed = std::chrono::steady_clock::now() - start;
    transcript_->record(TranscriptEntry{
        tag, system_prompt, user_prompt, response,
        std::chrono::duration<double, std::milli>(elapsed).count()});
    return response;
}

CountingDecision Llm::detect_counting(const std::string& query) {
    const std::string system_prompt =
        "You are a query classifier for a document question-answering system.";
    const std::string user_prompt =
        "Decide whether the question below asks for an exact count of how many times a word "
        "or phrase occurs in the source text. If it does, reply with exactly:\n"
        "COUNTING: <the single word or phrase to count>\n"
        "If it does not, reply with exactly:\nNORMAL\n\nQuestion: " +
        query;
    return ask_with_retry(
        *this, "detect", system_prompt, user_prompt,
        [](const std::string& response) -> std::optional<CountingDecision> {
            const std::string t = trim(response);
            const std::string u = upper(t);
            if (u == "NORMAL")
                return CountingDecision{false, {}};
            constexpr std::string_view prefix = "COUNTING:";
            if (u.rfind(prefix, 0) == 0) {
                Phrase phrase = normalize_phrase(std::string_view(t).substr(prefix.size()));
                if (!phrase.empty())
                    return CountingDecision{true, std::move(phrase)};
            }
            return std::nullopt;
        },
        "COUNTING: <phrase> | NORMAL");
}

std::vector<Phrase> Llm::expand_variants(const Phrase& phrase) {
    const std::string original = phrase.text();
    const std::string system_prompt = "You enumerate morphological variants of a word or phrase.";
    const std::string user_prompt =
        "List every tense and form of \"" + original +
        "\" (plural, past, present continuous, and similar). Reply with the forms only, "
        "separated by semicolons.\n\nExample reply: run; runs; ran; running";
    const std::string response = chat(system_prompt, user_prompt, "variants");

    std::vector<Phrase> variants;
    std::vector<std::string> seen;
    auto push_unique = [&](Phrase p) {
        if (p.empty())
            return;
        std::string key = p.text();
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
            seen.push_back(std::move(key));
            variants.push_back(std::move(p));
        }
    };
    for (const std::string& item : split_list(response))
        push_unique(normalize_phrase(item));
    // the original must always be counted, whatever the model forgot
    if (std::find(seen.begin(), seen.end(), original) == seen.end())
        variants.insert(variants.begin(), phrase);
    return variants;
}

TermSet Llm::generate_terms(const std::string& query) {
    const std::string system_prompt = "You produce search terms for a lexical retrieval system.";
    const std::string user_prompt =
        "Generate the words or short phrases most likely to appear verbatim in a passage that "
        "answers the question. Reply with the terms only, separated by semicolons.\n\nQuestion: " +
        query;
    return ask_with_retry(
        *this, "terms", system_prompt, user_prompt,
        [](const std::string& response) { return parse_term_list(response, TermOrigin::initial); },
        "semicolon-separated non-empty term list");
}

LlmDecision Llm::judge_sufficiency(const std::string& query, std::span<const Chunk> chunks,
                                   std::span<const double> importance) {
    const std::string system_prompt =
        "You assess whether retrieved context suffices to answer a question.";
    const std::string user_prompt =
        "Question: " + query +
        "\n\nRetrieved context, each block tagged with an importance score in [0,1] "
        "(higher = more influential on the answer):\n\n" +
        render_chunks(chunks, importance) +
        "If the context is enough to answer the question, reply exactly SUFFICIENT. "
        "Otherwise reply INSUFFICIENT: <what is missing>.";
    return ask_with_retry(
        *this, "judge", system_prompt, user_prompt,
        [](const std::string& response) -> std::optional<LlmDecision> {
            const std::string t = trim(response);
            const std::string u = upper(t);
            auto rationale_after = [&](std::size_t n) {
                std::string r = trim(std::string_view(t).substr(n));
                if (!r.empty() && r.front() == ':')
                    r = trim(std::string_view(r).substr(1));
                return r;
            };
            // longest keyword first: SUFFICIENT is a suffix of INSUFFICIENT
            if (u.rfind("INSUFFICIENT", 0) == 0)
                return LlmDecision{false, rationale_after(12)};
            if (u.rfind("SUFFICIENT", 0) == 0)
                return LlmDecision{true, rationale_after(10)};
            return std::nullopt;
        },
        "SUFFICIENT | INSUFFICIENT: <why>");
}

TermSet Llm::breadth_extend(const std::string& query, const TermSet& prev_terms,
                            std::span<const Chunk> chunks) {
    std::string previous;
    for (std::size_t i = 0; i < prev_terms.terms.size(); ++i) {
        if (i)
            previous += "; ";
        previous += prev_terms.terms[i].text();
    }
    const std::string system_prompt = "You produce search terms for a lexical retrieval system.";
    const std::string user_prompt =
        "The terms tried so far did not retrieve enough context. Re-generate an expanded list "
        "of search words or phrases for the question, based on the previous terms and what was "
        "retrieved. Reply with the terms only, separated by semicolons.\n\nQuestion: " +
        query + "\n\nPrevious terms: " + previous + "\n\nRetrieved so far:\n\n" +
        render_chunks(chunks);
    return ask_with_retry(
        *this, "breadth", system_prompt, user_prompt,
        [](const std::string& response) { return parse_term_list(response, TermOrigin::breadth); },
        "semicolon-separated non-empty term list");
}

TermSet Llm::depth_extend(std::span<const Chunk> chunks) {
    const std::string system_prompt = "You produce search terms for a lexical retrieval system.";
    const std::string user_prompt =
        "Extract new search words or phrases that appear in, or are strongly suggested by, the "
        "passages below, to retrieve related context elsewhere in the same document. Reply with "
        "the terms only, separated by semicolons.\n\nPassages:\n\n" +
        render_chunks(chunks);
    return ask_with_retry(
        *this, "depth", system_prompt, user_prompt,
        [](const std::string& response) { return parse_term_list(response, TermOrigin::depth); },
        "semicolon-separated non-empty term list");
}

namespace {

/// Extracts the answer label: the last "Answer: X" occurrence wins; otherwise
/// a bare one-token reply is accepted. Returns the canonical choice label.
std::optional<std::string> parse_label(const std::string& response,
                                       std::span<const Choice> choices) {
    static const std::regex answer_re(R"(Answer\s*:\s*([A-Za-z][A-Za-z0-9]*))",
                                      std::regex::icase);
    std::string candidate;
    for (std::sregex_iterator it(response.begin(), response.end(), answer_re), end; it != end;
         ++it)
        candidate = (*it)[1].str();
    if (candidate.empty()) {
        const std::string t = trim(response);
        if (!t.empty() && t.find_first_of(" \t\n\r") == std::string::npos)
            candidate = t;
    }
    if (candidate.empty())
        return std::nullopt;
    const std::string u = upper(candidate);
    for (const Choice& c : choices)
        if (upper(c.label) == u)
            return c.label;
    return std::nullopt;
}

} // namespace

std::string Llm::trim_and_answer(const std::string& query, std::span<const Chunk> chunks,
                                 std::span<const Choice> choices) {
    const std::string system_prompt = "You answer questions strictly from the provided context.";
    std::string user_prompt = "Context:\n\n" + render_chunks(chunks) + "Question: " + query + "\n";
    if (choices.empty()) {
        user_prompt +=
            "\nIgnore any context irrelevant to the question, then answer concisely.";
        return trim(chat(system_prompt, user_prompt, "answer"));
    }
    user_prompt += "\nChoices:\n" + render_choices(choices) +
                   "\nIgnore any context irrelevant to the question. Reply with "
                   "\"Answer: <label>\" where <label> is one of the choice labels.";
    return ask_with_retry(
        *this, "answer", system_prompt, user_prompt,
        [&choices](const std::string& response) { return parse_label(response, choices); },
        "Answer: <choice label>");
}

std::string Llm::vote(const std::string& query, std::span<const Chunk> chunks,
                      std::span<const Choice> choices, std::size_t n_voters) {
    if (choices.empty() || n_voters <= 1)
        return trim_and_answer(query, chunks, choices);
    std::map<std::string, std::size_t> tally;
    for (std::size_t i = 0; i < n_voters; ++i)
        ++tally[trim_and_answer(query, chunks, choices)];
    // std::map iterates labels in ascending order, so on a tie the first
    // maximum seen is the alphabetically earliest label
    std::string winner;
    std::size_t best = 0;
    for (const auto& [label, count] : tally) {
        if (count > best) {
            best = count;
            winner = label;
        }
    }
    return winner;
}

} // namespace lexrag
