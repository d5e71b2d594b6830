#include "lexrag/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>

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

std::uint64_t parse_u64(const std::string& value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError("expected a non-negative integer, got \"" + value + "\"");
    return out;
}

double parse_double(const std::string& value) {
    std::size_t consumed = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got \"" + value + "\"");
    }
    if (consumed != value.size())
        throw ConfigError("expected a number, got \"" + value + "\"");
    return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"recall_index", [](PipelineConfig& c, const std::string& v) { c.recall_index = parse_u64(v); }},
        {"neighbor_num",
         [](PipelineConfig& c, const std::string& v) {
             c.neighbor_num = static_cast<std::uint32_t>(parse_u64(v));
         }},
        {"deep_search_index",
         [](PipelineConfig& c, const std::string& v) { c.deep_search_index = parse_u64(v); }},
        {"deep_search_num",
         [](PipelineConfig& c, const std::string& v) { c.deep_search_num = parse_u64(v); }},
        {"voter_num", [](PipelineConfig& c, const std::string& v) { c.voter_num = parse_u64(v); }},
        {"iter_max", [](PipelineConfig& c, const std::string& v) { c.iter_max = parse_u64(v); }},
        {"importance_samples",
         [](PipelineConfig& c, const std::string& v) { c.importance_samples = parse_u64(v); }},
        {"seed", [](PipelineConfig& c, const std::string& v) { c.seed = parse_u64(v); }},
        {"similarity",
         [](PipelineConfig& c, const std::string& v) { c.similarity_backend = v; }},
        {"model_url", [](PipelineConfig& c, const std::string& v) { c.backend.model_url = v; }},
        {"model_name", [](PipelineConfig& c, const std::string& v) { c.backend.model = v; }},
        {"temperature",
         [](PipelineConfig& c, const std::string& v) { c.backend.temperature = parse_double(v); }},
        {"timeout_s",
         [](PipelineConfig& c, const std::string& v) { c.backend.timeout_s = parse_double(v); }},
        {"scripted_fixture",
         [](PipelineConfig& c, const std::string& v) { c.backend.scripted_fixture = v; }},
        {"embed_url", [](PipelineConfig& c, const std::string& v) { c.backend.embed_url = v; }},
        {"embed_model", [](PipelineConfig& c, const std::string& v) { c.backend.embed_model = v; }},
        {"transcript_log",
         [](PipelineConfig& c, const std::string& v) { c.transcript_log = v; }},
    };
    return table;
}

} // namespace

void apply_config_file(PipelineConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        const std::string stripped = trim(line);
        if (stripped.empty())
            continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected \"key = value\", got \"" + stripped + "\"");
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown config key \"" +
                              key + "\"");
        try {
            it->second(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + key + ": " + e.what());
        }
    }
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"recall_index", "top-K sentences collected per round (default 25)"},
        {"neighbor_num", "context radius in sentences around each hit (default 5)"},
        {"deep_search_index", "highest-scored chunks fed to depth extension (default 5)"},
        {"deep_search_num", "max new terms accepted per extension round (default 10)"},
        {"voter_num", "answer votes in the Organizing stage (default 10)"},
        {"iter_max", "search-space extension budget (default 5)"},
        {"importance_samples", "noise perturbations per chunk (default 3)"},
        {"seed", "master RNG seed for noise sampling (default 42)"},
        {"similarity", "answer-similarity backend: lexical | embedding (default lexical)"},
        {"model_url", "chat endpoint base URL (default http://localhost:8000)"},
        {"model_name", "chat model name"},
        {"temperature", "sampling temperature (default 0.7)"},
        {"timeout_s", "HTTP timeout in seconds (default 120)"},
        {"scripted_fixture", "path to a scripted-response fixture; replaces the HTTP backend"},
        {"embed_url", "embedding endpoint base URL (embedding similarity only)"},
        {"embed_model", "embedding model name (default bge-m3)"},
        {"transcript_log", "JSON-lines transcript output path; empty disables"},
    };
    return keys;
}

} // namespace lexrag
